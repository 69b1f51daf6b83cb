#include "exo/gait.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <utility>

namespace exo {
namespace {

constexpr double kTimeGridTol = 1e-9;
constexpr double kComHeightTol = 1e-6;

// Joint slots inside one leg.
constexpr int kHipYaw = 0;
constexpr int kHipRoll = 1;
constexpr int kHipPitch = 2;
constexpr int kKnee = 3;
constexpr int kAnklePitch = 4;
constexpr int kAnkleRoll = 5;

std::vector<std::string> ColumnNames() {
  std::vector<std::string> names = {"t"};
  for (int j = 1; j <= kNumJoints; ++j) names.push_back("q" + std::to_string(j));
  for (const char* n : {"com_x", "com_y", "com_z", "cop_x", "cop_y", "phase"}) {
    names.emplace_back(n);
  }
  return names;
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(Trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Sample index -> row number used in error messages.
void ValidateSamples(const std::vector<GaitSample>& samples,
                     std::size_t row_offset) {
  if (samples.size() < 3) {
    throw GaitError("gait: need at least 3 samples");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const GaitSample& s = samples[i];
    if (!std::isfinite(s.t) || !s.q.allFinite() || !s.com.allFinite() ||
        !s.cop.allFinite()) {
      throw GaitError("gait: non-finite value", i + row_offset);
    }
  }
  const double period = samples[1].t - samples[0].t;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double dt = samples[i].t - samples[i - 1].t;
    if (!(dt > 0.0)) {
      throw GaitError("gait: non-monotone time", i + row_offset);
    }
    if (std::abs(dt - period) > kTimeGridTol) {
      throw GaitError("gait: non-uniform time grid", i + row_offset);
    }
  }
  const double cz = samples[0].com.z();
  if (!(cz > 0.0)) throw GaitError("gait: com_z must be > 0", row_offset);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (std::abs(samples[i].com.z() - cz) > kComHeightTol) {
      throw GaitError("gait: com_z not constant", i + row_offset);
    }
  }
}

GaitPhase MirrorPhase(GaitPhase p) {
  switch (p) {
    case GaitPhase::kSingleLeft: return GaitPhase::kSingleRight;
    case GaitPhase::kSingleRight: return GaitPhase::kSingleLeft;
    case GaitPhase::kDouble: return GaitPhase::kDouble;
  }
  return p;
}

bool IsSingle(GaitPhase p) { return p != GaitPhase::kDouble; }

// Exact LIP response over `dt` to a CoP moving linearly from u0 with slope k.
// c_p(t) = u(t) is a particular solution since it has zero acceleration.
void PropagateLinearCop(double u0, double slope, double dt, double omega,
                        double* c, double* v) {
  const double ch = std::cosh(omega * dt);
  const double sh = std::sinh(omega * dt);
  const double off = *c - u0;
  const double dv = *v - slope;
  *c = u0 + slope * dt + off * ch + dv / omega * sh;
  *v = slope + omega * off * sh + dv * ch;
}

}  // namespace

std::string_view PhaseName(GaitPhase phase) {
  switch (phase) {
    case GaitPhase::kSingleLeft: return "SS_LEFT";
    case GaitPhase::kSingleRight: return "SS_RIGHT";
    case GaitPhase::kDouble: return "DS";
  }
  return "DS";
}

std::optional<GaitPhase> ParsePhase(std::string_view name) {
  if (name == "SS_LEFT") return GaitPhase::kSingleLeft;
  if (name == "SS_RIGHT") return GaitPhase::kSingleRight;
  if (name == "DS") return GaitPhase::kDouble;
  return std::nullopt;
}

GaitError::GaitError(const std::string& what, std::size_t row)
    : std::runtime_error(row > 0 ? what + " (row " + std::to_string(row) + ")"
                                 : what),
      row_(row) {}

NominalGait::NominalGait(std::vector<GaitSample> samples)
    : samples_(std::move(samples)) {
  ValidateSamples(samples_, 0);
  period_ = (samples_.back().t - samples_.front().t) /
            static_cast<double>(samples_.size() - 1);

  std::size_t first = 0;
  for (std::size_t i = 1; i <= samples_.size(); ++i) {
    if (i == samples_.size() || samples_[i].phase != samples_[first].phase) {
      const GaitPhase kind = samples_[first].phase;
      // A double-support run ends where the following single support begins.
      const double end = (i < samples_.size() && !IsSingle(kind))
                             ? samples_[i].t
                             : samples_[i - 1].t;
      phases_.push_back({kind, first, i - 1, samples_[first].t, end});
      first = i;
    }
  }
  if (num_single_support() == 0) {
    throw GaitError("gait: no single-support phase");
  }
  for (const PhaseSegment& seg : phases_) {
    if (IsSingle(seg.kind) && seg.last - seg.first + 1 < kMinSamplesPerStep) {
      throw GaitError("gait: single-support phase has fewer than " +
                          std::to_string(kMinSamplesPerStep) + " samples",
                      seg.first);
    }
  }

  std::vector<double> cx(samples_.size()), cy(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    cx[i] = samples_[i].com.x();
    cy[i] = samples_[i].com.y();
  }
  com_x_ = UniformCubicSpline(samples_.front().t, period_, std::move(cx));
  com_y_ = UniformCubicSpline(samples_.front().t, period_, std::move(cy));
}

int NominalGait::num_single_support() const {
  return static_cast<int>(std::count_if(
      phases_.begin(), phases_.end(),
      [](const PhaseSegment& s) { return IsSingle(s.kind); }));
}

const PhaseSegment& NominalGait::single_support(int step_index) const {
  int k = 0;
  for (const PhaseSegment& seg : phases_) {
    if (!IsSingle(seg.kind)) continue;
    if (k++ == step_index) return seg;
  }
  throw std::out_of_range("gait: no single-support phase with index " +
                          std::to_string(step_index));
}

std::optional<PhaseSegment> NominalGait::leading_double_support() const {
  if (phases_.size() >= 2 && phases_[0].kind == GaitPhase::kDouble) {
    return phases_[0];
  }
  return std::nullopt;
}

LipState NominalGait::StateAt(double t) const {
  return {Vec2(com_x_(t), com_y_(t)),
          Vec2(com_x_.Derivative(t), com_y_.Derivative(t))};
}

Vec2 NominalGait::ComAt(double t) const { return Vec2(com_x_(t), com_y_(t)); }

Vec2 NominalGait::CopAt(double t) const {
  const double pos = std::clamp((t - start_time()) / period_, 0.0,
                                static_cast<double>(samples_.size() - 1));
  const std::size_t i = std::min(static_cast<std::size_t>(pos), samples_.size() - 2);
  const double a = pos - static_cast<double>(i);
  return (1.0 - a) * samples_[i].cop + a * samples_[i + 1].cop;
}

Vec2 NominalGait::NextFoothold() const {
  const LipState x0 = initial_state();
  const LipState xf = final_state();
  return Vec2(xf.com.x() - x0.com.x(), xf.com.y() + x0.com.y());
}

NominalGait NominalGait::Mirrored() const {
  std::vector<GaitSample> out = samples_;
  for (GaitSample& s : out) {
    JointVector q;
    q.head<kLegJoints>() = s.q.tail<kLegJoints>();
    q.tail<kLegJoints>() = s.q.head<kLegJoints>();
    for (int leg = 0; leg < 2; ++leg) {
      for (int j : {kHipYaw, kHipRoll, kAnkleRoll}) {
        q[leg * kLegJoints + j] = -q[leg * kLegJoints + j];
      }
    }
    s.q = q;
    s.com.y() = -s.com.y();
    s.cop.y() = -s.cop.y();
    s.phase = MirrorPhase(s.phase);
  }
  return NominalGait(std::move(out));
}

void NominalGait::SwingTrajectory(int step_index, std::vector<double>* times,
                                  std::vector<Eigen::VectorXd>* positions) const {
  const PhaseSegment& seg = single_support(step_index);
  const int offset = SwingLegOffset(seg.kind);
  times->clear();
  positions->clear();
  for (std::size_t i = seg.first; i <= seg.last; ++i) {
    times->push_back(samples_[i].t);
    positions->push_back(samples_[i].q.segment<kLegJoints>(offset));
  }
}

int SwingLegOffset(GaitPhase phase) {
  switch (phase) {
    case GaitPhase::kSingleLeft: return kLegJoints;  // right leg swings
    case GaitPhase::kSingleRight: return 0;
    case GaitPhase::kDouble: break;
  }
  throw std::invalid_argument("gait: no swing leg during double support");
}

LipState ToNextStepFrame(const LipState& state, const Vec2& foothold) {
  return {Vec2(state.com.x() - foothold.x(), -(state.com.y() - foothold.y())),
          Vec2(state.com_vel.x(), -state.com_vel.y())};
}

LipState FromNextStepFrame(const LipState& state, const Vec2& foothold) {
  return {Vec2(state.com.x() + foothold.x(), foothold.y() - state.com.y()),
          Vec2(state.com_vel.x(), -state.com_vel.y())};
}

Vec2 RearFoot(const Vec2& foothold) { return Vec2(-foothold.x(), foothold.y()); }

SupportPolygon StanceFoot(const SupportPolygon& foot, GaitPhase phase) {
  return phase == GaitPhase::kSingleRight ? foot.Mirrored() : foot;
}

SupportPolygon DoubleSupportPolygon(const SupportPolygon& stance,
                                    const Vec2& foothold) {
  const SupportPolygon rear(stance.center() + RearFoot(foothold),
                            stance.half_extents());
  return SupportPolygon::BoundingBox(stance, rear);
}

std::optional<std::size_t> FindCopViolation(const NominalGait& gait,
                                            const SupportPolygon& foot,
                                            double margin_fraction) {
  const double keep = 1.0 - margin_fraction;
  const GaitPhase first_single = gait.single_support(0).kind;
  const SupportPolygon stance = StanceFoot(foot, first_single);
  const SupportPolygon ds =
      DoubleSupportPolygon(stance, gait.NextFoothold()).Shrunk(keep);
  const auto& samples = gait.samples();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const GaitPhase p = samples[i].phase;
    const SupportPolygon poly =
        IsSingle(p) ? StanceFoot(foot, p).Shrunk(keep) : ds;
    if (!poly.Contains(samples[i].cop)) return i;
  }
  return std::nullopt;
}

NominalGait GenerateSyntheticGait(const SyntheticGaitOptions& opt,
                                  const PendulumParams& params,
                                  const SupportPolygon& foot) {
  if (!(opt.step_duration > 0.0)) {
    throw std::invalid_argument("gait: step_duration must be > 0");
  }
  if (!(opt.double_support_fraction >= 0.0 && opt.double_support_fraction < 0.9)) {
    throw std::invalid_argument("gait: double_support_fraction not in [0, 0.9)");
  }
  if (!(opt.step_length >= 0.0) || !(opt.step_width >= 0.0)) {
    throw std::invalid_argument("gait: step_length and step_width must be >= 0");
  }
  if (!(opt.knee_lift > 0.0) || !(opt.sample_period > 0.0) ||
      !(opt.leg_length > 0.0)) {
    throw std::invalid_argument(
        "gait: knee_lift, sample_period and leg_length must be > 0");
  }

  // Sample grid: at least 200 samples over the single support.
  const double t_ss_guess = opt.step_duration * (1.0 - opt.double_support_fraction);
  const double dt_max = std::min(opt.sample_period, t_ss_guess / 200.0);
  const int n = static_cast<int>(std::ceil(opt.step_duration / dt_max - 1e-9));
  const double dt = opt.step_duration / n;
  int n_ds = static_cast<int>(std::lround(opt.double_support_fraction * n));
  const double t_ds = n_ds * dt;
  const double t_ss = opt.step_duration - t_ds;

  // CoP reference, in the stance-foot frame: heel-to-toe roll during single
  // support, straight transfer from the trailing foot during double support.
  const Vec2 foothold(opt.step_length, -opt.step_width);
  const Vec2 fc = foot.center();
  const double roll = std::clamp(opt.step_length / 6.0, 0.0, 0.5 * foot.half_extents().x());
  const Vec2 ds_from = fc + RearFoot(foothold) + Vec2(roll, 0.0);
  const Vec2 ss_from = fc + Vec2(-roll, 0.0);
  const Vec2 ss_to = fc + Vec2(roll, 0.0);
  auto cop_at_index = [&](int i) -> Vec2 {
    if (i <= n_ds && n_ds > 0) {
      return ds_from + (ss_from - ds_from) * (static_cast<double>(i) / n_ds);
    }
    return ss_from + (ss_to - ss_from) * (static_cast<double>(i - n_ds) / (n - n_ds));
  };

  const double w = params.omega;
  auto run_axis = [&](int axis, double c0, double v0, std::vector<double>* out_c,
                      std::vector<double>* out_v) {
    double c = c0, v = v0;
    if (out_c) { out_c->assign(1, c); out_v->assign(1, v); }
    for (int i = 0; i < n; ++i) {
      const double u0 = cop_at_index(i)[axis];
      const double u1 = cop_at_index(i + 1)[axis];
      PropagateLinearCop(u0, (u1 - u0) / dt, dt, w, &c, &v);
      if (out_c) { out_c->push_back(c); out_v->push_back(v); }
    }
    return std::pair<double, double>(c, v);
  };

  // The step map is affine per axis: x_end = A x0 + b. The hand-off map is
  // c' = s (c - d), cdot' = s cdot with s = +1 (x) or -1 (y), so the
  // periodic start solves (I - s A) x0 = s (b - (d, 0)).
  std::vector<double> com[2], vel[2];
  for (int axis = 0; axis < 2; ++axis) {
    const auto [b0, b1] = run_axis(axis, 0.0, 0.0, nullptr, nullptr);
    const auto [p0, p1] = run_axis(axis, 1.0, 0.0, nullptr, nullptr);
    const auto [q0, q1] = run_axis(axis, 0.0, 1.0, nullptr, nullptr);
    Eigen::Matrix2d A;
    A << p0 - b0, q0 - b0, p1 - b1, q1 - b1;
    const double s = axis == 0 ? 1.0 : -1.0;
    const Eigen::Vector2d rhs = s * Eigen::Vector2d(b0 - foothold[axis], b1);
    const Eigen::Vector2d x0 =
        (Eigen::Matrix2d::Identity() - s * A).partialPivLu().solve(rhs);
    run_axis(axis, x0[0], x0[1], &com[axis], &vel[axis]);
  }

  const double v_max = std::sqrt(opt.max_froude * params.gravity * params.com_height);
  for (int i = 0; i <= n; ++i) {
    const double speed = std::hypot(vel[0][i], vel[1][i]);
    if (!std::isfinite(speed) || speed > v_max) {
      std::ostringstream msg;
      msg << "gait: periodic CoM motion needs speed " << speed
          << " m/s, above the walking limit " << v_max << " m/s";
      throw InfeasibleGaitError(msg.str());
    }
  }

  // Swing leg at constant joint-space speed: with theta = pi tau / T_ss,
  // "sin" joints have velocity ~ cos(theta) and "cos" joints ~ sin(theta);
  // equal summed squared amplitudes make the speed norm constant.
  const double hip = std::atan(opt.step_length / (2.0 * opt.leg_length));
  const double knee = opt.knee_lift;
  const double sin_sq = 1.25 * knee * knee;
  const double cos_sq = hip * hip;
  const double roll_amp = std::sqrt(std::abs(sin_sq - cos_sq));
  const bool roll_is_cos = sin_sq >= cos_sq;

  auto joints_at = [&](double tau) {
    const double th = std::numbers::pi * std::clamp(tau / t_ss, 0.0, 1.0);
    const double s = std::sin(th);
    const double c = std::cos(th);
    JointVector q = JointVector::Zero();
    const int sw = kLegJoints;  // right leg swings during left support
    q[sw + kHipPitch] = -hip * c;
    q[sw + kKnee] = knee * s;
    q[sw + kAnklePitch] = -0.5 * knee * s;
    q[sw + kHipRoll] = roll_is_cos ? -roll_amp * c : roll_amp * s;
    q[kHipPitch] = hip * c;
    q[kKnee] = 0.05;
    q[kAnklePitch] = -0.05;
    return q;
  };

  std::vector<GaitSample> samples(n + 1);
  for (int i = 0; i <= n; ++i) {
    GaitSample& s = samples[i];
    s.t = i * dt;
    s.q = joints_at(s.t - t_ds);
    s.com = Eigen::Vector3d(com[0][i], com[1][i], params.com_height);
    s.cop = cop_at_index(i);
    s.phase = (i < n_ds) ? GaitPhase::kDouble : GaitPhase::kSingleLeft;
  }
  return NominalGait(std::move(samples));
}

NominalGait LoadGait(std::istream& in) {
  const std::vector<std::string> names = ColumnNames();
  std::string line;
  if (!std::getline(in, line) || Trim(line).empty()) {
    throw GaitError("gait csv: empty file", 1);
  }
  const std::vector<std::string> header = SplitCsv(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (std::find(names.begin(), names.end(), header[i]) == names.end()) {
      throw GaitError("gait csv: unknown column '" + header[i] + "'", 1);
    }
    if (!column.emplace(header[i], i).second) {
      throw GaitError("gait csv: duplicate column '" + header[i] + "'", 1);
    }
  }
  for (const std::string& name : names) {
    if (!column.count(name)) {
      throw GaitError("gait csv: missing column '" + name + "'", 1);
    }
  }

  std::vector<GaitSample> samples;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (Trim(line).empty()) continue;
    const std::vector<std::string> f = SplitCsv(line);
    if (f.size() != header.size()) {
      throw GaitError("gait csv: expected " + std::to_string(header.size()) +
                          " fields, got " + std::to_string(f.size()),
                      row);
    }
    auto num = [&](const std::string& name) {
      const std::string& text = f[column.at(name)];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != text.size()) {
        throw GaitError("gait csv: bad number '" + text + "' in column " + name, row);
      }
      return v;
    };
    GaitSample s;
    s.t = num("t");
    for (int j = 0; j < kNumJoints; ++j) s.q[j] = num("q" + std::to_string(j + 1));
    s.com = Eigen::Vector3d(num("com_x"), num("com_y"), num("com_z"));
    s.cop = Vec2(num("cop_x"), num("cop_y"));
    const auto phase = ParsePhase(f[column.at("phase")]);
    if (!phase) {
      throw GaitError("gait csv: bad phase '" + f[column.at("phase")] + "'", row);
    }
    s.phase = *phase;
    samples.push_back(s);
  }
  if (samples.empty()) throw GaitError("gait csv: no data rows", row);
  // Data rows start on line 2.
  ValidateSamples(samples, 2);
  try {
    return NominalGait(std::move(samples));
  } catch (const GaitError& e) {
    throw GaitError(e.what(), e.row() > 0 ? e.row() + 2 : 0);
  }
}

NominalGait LoadGaitFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GaitError("gait csv: cannot open '" + path + "'");
  return LoadGait(in);
}

void SaveGait(const NominalGait& gait, std::ostream& out) {
  const std::vector<std::string> names = ColumnNames();
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << (i ? "," : "") << names[i];
  }
  out << '\n' << std::setprecision(17);
  for (const GaitSample& s : gait.samples()) {
    out << s.t;
    for (int j = 0; j < kNumJoints; ++j) out << ',' << s.q[j];
    out << ',' << s.com.x() << ',' << s.com.y() << ',' << s.com.z() << ','
        << s.cop.x() << ',' << s.cop.y() << ',' << PhaseName(s.phase) << '\n';
  }
}

void SaveGaitFile(const NominalGait& gait, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("gait csv: cannot write '" + path + "'");
  SaveGait(gait, out);
  if (!out) throw std::runtime_error("gait csv: write failed for '" + path + "'");
}

}  // namespace exo
