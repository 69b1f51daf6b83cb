#include "exo/run_config.h"

#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace exo {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> SplitCommas(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(Trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double ParseDouble(std::string_view s) {
  s = Trim(s);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("not a finite number: '" + std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int ParseInt(std::string_view s) {
  s = Trim(s);
  Int v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> ParseList(std::string_view s) {
  std::vector<double> out;
  for (std::string_view item : SplitCommas(s)) out.push_back(ParseDouble(item));
  return out;
}

Vec2 ParseVec2(std::string_view s) {
  const std::vector<double> v = ParseList(s);
  if (v.size() == 1) return Vec2::Constant(v[0]);
  if (v.size() != 2) throw ConfigError("expected one or two numbers: '" + std::string(s) + "'");
  return Vec2(v[0], v[1]);
}

// Shortest text that parses back to the same double.
std::string Format(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string FormatList(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += Format(v[i]);
  }
  return out;
}

std::string FormatVec2(const Vec2& v) { return Format(v.x()) + ',' + Format(v.y()); }

struct Entry {
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <typename Access>
Entry Number(std::string key, std::string help, Access access) {
  return {std::move(key), std::move(help),
          [access](const RunConfig& c) { return Format(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, std::string_view v) { access(c) = ParseDouble(v); }};
}

template <typename Access>
Entry Integer(std::string key, std::string help, Access access) {
  using Int = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  return {std::move(key), std::move(help),
          [access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, std::string_view v) { access(c) = ParseInt<Int>(v); }};
}

template <typename Access>
Entry Pair(std::string key, std::string help, Access access) {
  return {std::move(key), std::move(help),
          [access](const RunConfig& c) { return FormatVec2(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, std::string_view v) { access(c) = ParseVec2(v); }};
}

template <typename Access>
Entry Text(std::string key, std::string help, Access access) {
  return {std::move(key), std::move(help),
          [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); },
          [access](RunConfig& c, std::string_view v) { access(c) = std::string(Trim(v)); }};
}

template <typename Access>
Entry List(std::string key, std::string help, Access access) {
  return {std::move(key), std::move(help),
          [access](const RunConfig& c) { return FormatList(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, std::string_view v) { access(c) = ParseList(v); }};
}

const std::vector<Entry>& Entries() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"strategy", "reference generation: op (online planning) or tr (time rescaling)",
                 [](const RunConfig& c) { return std::string(StrategyName(c.strategy)); },
                 [](RunConfig& c, std::string_view v) {
                   const auto s = ParseStrategy(Trim(v));
                   if (!s) throw ConfigError("unknown strategy '" + std::string(v) + "'");
                   c.strategy = *s;
                 }});
    e.push_back(Text("profile", "patient: nominal, square:M,D[,ONSET], alternating:DELTA,D[,ONSET], torque:F,K",
                     [](RunConfig& c) -> std::string& { return c.profile; }));
    e.push_back(Integer("steps", "steps per walk", [](RunConfig& c) -> int& { return c.steps; }));
    e.push_back(Text("output_dir", "directory for outputs and the config echo",
                     [](RunConfig& c) -> std::string& { return c.output_dir; }));
    e.push_back(Integer("seed", "seed for the benchmark replay order",
                        [](RunConfig& c) -> std::uint64_t& { return c.seed; }));
    e.push_back(Integer("threads", "stability map workers, 0 for all cores",
                        [](RunConfig& c) -> int& { return c.threads; }));

    e.push_back(Text("gait.file", "gait CSV to load; empty for the synthetic gait",
                     [](RunConfig& c) -> std::string& { return c.gait_file; }));
    e.push_back(Number("gait.step_length", "m, forward distance between footholds",
                       [](RunConfig& c) -> double& { return c.gait.step_length; }));
    e.push_back(Number("gait.step_duration", "s, double plus single support",
                       [](RunConfig& c) -> double& { return c.gait.step_duration; }));
    e.push_back(Number("gait.step_width", "m, lateral distance between feet",
                       [](RunConfig& c) -> double& { return c.gait.step_width; }));
    e.push_back(Number("gait.double_support_fraction", "share of the step in double support",
                       [](RunConfig& c) -> double& { return c.gait.double_support_fraction; }));
    e.push_back(Number("gait.sample_period", "s, upper bound on the gait sample spacing",
                       [](RunConfig& c) -> double& { return c.gait.sample_period; }));
    e.push_back(Number("gait.knee_lift", "rad, peak swing knee flexion",
                       [](RunConfig& c) -> double& { return c.gait.knee_lift; }));
    e.push_back(Number("gait.leg_length", "m, maps step length to hip swing",
                       [](RunConfig& c) -> double& { return c.gait.leg_length; }));
    e.push_back(Number("gait.max_froude", "walking limit v^2 / (g c_z)",
                       [](RunConfig& c) -> double& { return c.gait.max_froude; }));

    e.push_back({"lip.gravity", "m/s^2",
                 [](const RunConfig& c) { return Format(c.sim.params.gravity); },
                 [](RunConfig& c, std::string_view v) {
                   c.sim.params = PendulumParams::Make(ParseDouble(v), c.sim.params.com_height);
                 }});
    e.push_back({"lip.com_height", "m, constant CoM height",
                 [](const RunConfig& c) { return Format(c.sim.params.com_height); },
                 [](RunConfig& c, std::string_view v) {
                   c.sim.params = PendulumParams::Make(c.sim.params.gravity, ParseDouble(v));
                 }});
    e.push_back({"foot.center", "m, support rectangle center in the foot frame (x,y)",
                 [](const RunConfig& c) { return FormatVec2(c.sim.foot.center()); },
                 [](RunConfig& c, std::string_view v) {
                   c.sim.foot = SupportPolygon(ParseVec2(v), c.sim.foot.half_extents());
                 }});
    e.push_back({"foot.half_extents", "m, support rectangle half sizes (x,y)",
                 [](const RunConfig& c) { return FormatVec2(c.sim.foot.half_extents()); },
                 [](RunConfig& c, std::string_view v) {
                   c.sim.foot = SupportPolygon(c.sim.foot.center(), ParseVec2(v));
                 }});

    e.push_back(Pair("stabilizer.kp", "DCM proportional gain (x,y)",
                     [](RunConfig& c) -> Vec2& { return c.sim.stabilizer.gains.kp; }));
    e.push_back(Pair("stabilizer.ki", "DCM integral gain (x,y)",
                     [](RunConfig& c) -> Vec2& { return c.sim.stabilizer.gains.ki; }));
    e.push_back(Pair("stabilizer.kd", "DCM derivative gain (x,y)",
                     [](RunConfig& c) -> Vec2& { return c.sim.stabilizer.gains.kd; }));
    e.push_back(Number("stabilizer.windup_bound", "m s, bound on the integral norm",
                       [](RunConfig& c) -> double& { return c.sim.stabilizer.windup_bound; }));
    e.push_back(Number("sim.tick", "s, control period",
                       [](RunConfig& c) -> double& { return c.sim.tick; }));
    e.push_back(Number("sim.actuation_lag", "s, first-order lag on the applied CoP",
                       [](RunConfig& c) -> double& { return c.sim.actuation_lag; }));

    e.push_back(Integer("planner.knots", "piecewise-constant CoP pieces per axis",
                        [](RunConfig& c) -> int& { return c.sim.planner.knots; }));
    e.push_back(Number("planner.t_min", "s, shortest duration searched",
                       [](RunConfig& c) -> double& { return c.sim.planner.t_min; }));
    e.push_back(Number("planner.t_max", "s, longest duration searched",
                       [](RunConfig& c) -> double& { return c.sim.planner.t_max; }));
    e.push_back(Number("planner.scan_ratio", "relative spacing of the duration scan grid",
                       [](RunConfig& c) -> double& { return c.sim.planner.scan_ratio; }));
    e.push_back(Number("planner.time_tol", "s, duration tolerance",
                       [](RunConfig& c) -> double& { return c.sim.planner.time_tol; }));
    e.push_back(Integer("planner.max_iterations", "dual Newton iterations per axis",
                        [](RunConfig& c) -> int& { return c.sim.planner.max_iterations; }));
    e.push_back(Number("planner.freeze_time", "s, follow the last plan open loop below this",
                       [](RunConfig& c) -> double& { return c.sim.freeze_time; }));
    e.push_back(Number("planner.margin", "fraction of the polygon the planner aims to use",
                       [](RunConfig& c) -> double& { return c.sim.plan_margin; }));
    e.push_back(Integer("path.knots", "swing path arc-length table size",
                        [](RunConfig& c) -> int& { return c.sim.path.knots; }));
    e.push_back(Number("path.min_speed", "joint-space speed floor",
                       [](RunConfig& c) -> double& { return c.sim.path.min_speed; }));

    e.push_back(Number("swing.kp", "guide stiffness per joint",
                       [](RunConfig& c) -> double& { return c.sim.swing_kp; }));
    e.push_back(Number("swing.kd", "guide damping per joint",
                       [](RunConfig& c) -> double& { return c.sim.swing_kd; }));
    e.push_back(Number("swing.inertia", "kg m^2 per joint of the swing surrogate",
                       [](RunConfig& c) -> double& { return c.sim.swing_inertia; }));
    e.push_back(Number("guides.min_fraction", "lower speed bound, fraction of nominal",
                       [](RunConfig& c) -> double& { return c.sim.velocity_min_fraction; }));
    e.push_back(Number("guides.max_fraction", "upper speed bound, fraction of nominal",
                       [](RunConfig& c) -> double& { return c.sim.velocity_max_fraction; }));
    e.push_back(Number("guides.filter", "s, low-pass on the estimated speed, 0 disables",
                       [](RunConfig& c) -> double& { return c.sim.velocity_filter; }));

    e.push_back(Number("fall.saturation_timeout", "s of continuous CoP saturation that count as a fall",
                       [](RunConfig& c) -> double& { return c.sim.saturation_timeout; }));
    e.push_back(Number("fall.saturation_tolerance", "m, CoP exits below this are ignored",
                       [](RunConfig& c) -> double& { return c.sim.saturation_tolerance; }));
    e.push_back(Number("fall.terminal_error", "m, end-of-step CoM error that counts as a fall",
                       [](RunConfig& c) -> double& { return c.sim.terminal_error_max; }));
    e.push_back(Number("fall.divergence", "m from the stance foot that ends the run",
                       [](RunConfig& c) -> double& { return c.sim.divergence_limit; }));

    e.push_back(List("map.magnitudes", "speed fractions of the stability map",
                     [](RunConfig& c) -> std::vector<double>& { return c.map_magnitudes; }));
    e.push_back(List("map.durations", "s, square wave durations of the stability map",
                     [](RunConfig& c) -> std::vector<double>& { return c.map_durations; }));
    e.push_back(Integer("map.steps", "steps per stability map cell",
                        [](RunConfig& c) -> int& { return c.map_steps; }));
    e.push_back(Text("bench.corpus", "recorded corpus CSV; empty records a fresh one",
                     [](RunConfig& c) -> std::string& { return c.corpus; }));
    e.push_back(Integer("bench.cases", "size of a freshly recorded corpus",
                        [](RunConfig& c) -> int& { return c.bench_cases; }));
    return e;
  }();
  return entries;
}

const Entry& Find(std::string_view key) {
  for (const Entry& e : Entries()) {
    if (e.key == key) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void RunConfig::Validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
  if (steps < 1) fail("steps must be >= 1");
  if (threads < 0) fail("threads must be >= 0");
  if (map_steps < 1) fail("map.steps must be >= 1");
  if (bench_cases < 1) fail("bench.cases must be >= 1");
  if (map_magnitudes.empty() || map_durations.empty()) fail("map grid must be nonempty");
  for (double m : map_magnitudes) {
    if (!(m > 0.0)) fail("map.magnitudes must be > 0");
  }
  for (double d : map_durations) {
    if (!(d > 0.0)) fail("map.durations must be > 0");
  }
  if (!(sim.params.gravity > 0.0) || !(sim.params.com_height > 0.0)) {
    fail("lip.gravity and lip.com_height must be > 0");
  }
  if (!(sim.foot.half_extents().minCoeff() > 0.0)) fail("foot.half_extents must be > 0");
  try {
    sim.Validate();
    sim.planner.Validate();
    PatientModel::Parse(profile);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const Entry& e : Entries()) keys.push_back(e.key);
  return keys;
}

std::string ConfigHelp(std::string_view key) { return Find(key).help; }

void SetConfigValue(RunConfig& config, std::string_view key, std::string_view value) {
  const Entry& e = Find(key);
  try {
    e.set(config, value);
  } catch (const ConfigError& err) {
    throw ConfigError(e.key + ": " + err.what());
  } catch (const std::invalid_argument& err) {
    throw ConfigError(e.key + ": " + err.what());
  }
}

std::string GetConfigValue(const RunConfig& config, std::string_view key) {
  return Find(key).get(config);
}

void ApplyConfigFile(RunConfig& config, std::istream& in) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = Trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    try {
      SetConfigValue(config, Trim(s.substr(0, eq)), Trim(s.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void WriteConfig(std::ostream& out, const RunConfig& config) {
  for (const Entry& e : Entries()) {
    out << "# " << e.help << '\n' << e.key << " = " << e.get(config) << '\n';
  }
}

}  // namespace exo
