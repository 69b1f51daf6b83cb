#ifndef EXO_SIM_H_
#define EXO_SIM_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exo/gait.h"
#include "exo/lip.h"
#include "exo/replanner.h"
#include "exo/stabilizer.h"
#include "exo/swing_path.h"
#include "exo/time_rescale.h"
#include "exo/virtual_guides.h"

namespace exo {

enum class Strategy { kTimeRescaling, kOnlinePlanning };

std::string_view StrategyName(Strategy s);  // "tr" / "op"
std::optional<Strategy> ParseStrategy(std::string_view name);

// Where the patient's target speed comes from. Scripted profiles give it as
// a fraction of the nominal path speed, as a function of the time since the
// start of the current single support. The tangent-torque patient pushes
// the simulated swing leg along the path instead, and the speed is
// estimated from the joint state.
class PatientModel {
 public:
  enum class Kind { kScripted, kTangentTorque };

  static PatientModel Nominal();
  // `magnitude` during [onset, onset + duration), nominal otherwise.
  static PatientModel Square(double magnitude, double duration, double onset = 0.0);
  // Square waves of 1 + delta on even steps and 1 - delta on odd steps.
  static PatientModel Alternating(double delta, double duration, double onset = 0.0);
  // tau_u = stiffness * T(sigma) * (speed_fraction * nominal - sigma_dot).
  static PatientModel TangentTorque(double speed_fraction, double stiffness);

  // Parses "nominal", "square:M,D[,ONSET]", "alternating:DELTA,D[,ONSET]" or
  // "torque:FRACTION,STIFFNESS". Throws std::invalid_argument.
  static PatientModel Parse(std::string_view spec);
  std::string Describe() const;

  Kind kind() const { return kind_; }
  double SpeedFraction(int step, double t_in_step) const;
  double stiffness() const { return stiffness_; }
  double desired_fraction() const { return magnitude_; }

 private:
  Kind kind_ = Kind::kScripted;
  bool alternating_ = false;
  double magnitude_ = 1.0;
  double duration_ = 0.0;
  double onset_ = 0.0;
  double stiffness_ = 0.0;
};

// Decoupled swing-leg surrogate: J qddot = tau, semi-implicit Euler.
class SwingPlant {
 public:
  SwingPlant(Eigen::VectorXd inertia, SwingJointState state);

  const SwingJointState& state() const { return state_; }
  void Step(const Eigen::VectorXd& torque, double dt);

 private:
  Eigen::VectorXd inertia_;
  SwingJointState state_;
};

enum class FallReason { kNone, kCopSaturationTimeout, kTerminalError, kPlannerInfeasible };

std::string_view FallReasonName(FallReason r);

struct StepOutcome {
  int step = 0;
  bool stable = true;
  FallReason reason = FallReason::kNone;
  double terminal_error = 0.0;        // m, CoM position at the end of the step
  double terminal_state_error = 0.0;  // position plus velocity error
  double duration = 0.0;              // s, double plus single support
  double respected_fraction = 1.0;    // of the single-support ticks
  double max_integral = 0.0;          // m s, stabilizer integral norm
  double max_reference_exit = 0.0;    // m, reference CoP outside the polygon
};

struct SimConfig {
  PendulumParams params = PendulumParams::Make();
  SupportPolygon foot;
  double tick = 1e-3;
  StabilizerConfig stabilizer;
  double actuation_lag = 0.0;  // s, first-order lag on the applied CoP
  PlannerOptions planner;
  double freeze_time = 0.1;    // s, stop replanning when this little is left
  double plan_margin = 0.9;    // fraction of the polygon the planner may use
  SwingPathOptions path;
  double swing_kp = 4.0e4;
  double swing_kd = 4.0e2;
  double swing_inertia = 1.0;
  double velocity_min_fraction = 0.1;
  double velocity_max_fraction = 2.0;
  double velocity_filter = 0.0;     // s, 0 disables
  double saturation_timeout = 0.2;  // s
  double saturation_tolerance = 0.005;  // m, exits up to this do not count
  double terminal_error_max = 0.08; // m
  double divergence_limit = 1.0;    // m from the stance foot, ends the run
  bool record_trace = true;

  // Throws std::invalid_argument on out-of-range values.
  void Validate() const;
};

// One control tick in the world frame.
struct TraceRow {
  double t = 0.0;
  double sigma = 0.0;
  double sigma_dot_target = 0.0;
  double sigma_dot_opt = 0.0;
  double t_target = 0.0;
  double t_opt = 0.0;
  bool respected = true;
  Vec2 com = Vec2::Zero();
  Vec2 dcm = Vec2::Zero();
  Vec2 u_star = Vec2::Zero();
  Vec2 u_cmd = Vec2::Zero();      // desired CoP before clamping
  Vec2 u_applied = Vec2::Zero();
  GaitPhase phase = GaitPhase::kDouble;
  double swing_error = 0.0;       // rad, |q - P(sigma)|, torque patients only
};

// A solved planning instance, in the support-foot frame of its step.
struct PlannerRecord {
  int step = 0;
  bool double_support = false;
  BoundaryConditions bc;
  double t_target = 0.0;
  double t_opt = 0.0;
  double hint = 0.0;           // warm start handed to the planner, 0 if none
  bool respected = true;
  bool fast_path = false;
  double cpu_seconds = 0.0;
  double max_cop_exit = 0.0;   // of the planned knots
  double terminal_error = 0.0; // re-propagated plan vs xf
};

struct WalkResult {
  std::vector<StepOutcome> steps;
  std::vector<TraceRow> trace;
  std::vector<PlannerRecord> plans;

  bool fallen() const;
};

// Closed-loop walk repeating the gait's first step (leading double support,
// then single support) with support-side alternation.
class Simulator {
 public:
  Simulator(NominalGait gait, SimConfig config);

  const NominalGait& gait() const { return gait_; }
  const SimConfig& config() const { return config_; }
  const SwingPath& path() const { return path_; }
  double nominal_rate() const { return nominal_rate_; }
  double single_support_duration() const;

  WalkResult RunWalk(Strategy strategy, const PatientModel& patient, int n_steps) const;
  WalkResult RunStep(Strategy strategy, const PatientModel& patient) const {
    return RunWalk(strategy, patient, 1);
  }

 private:
  NominalGait gait_;
  SimConfig config_;
  SwingPath path_;
  double nominal_rate_;
};

// Fall rules for one finished step: u^d outside the polygon on at least
// `saturation_timeout` worth of consecutive ticks, a terminal CoM error
// above `terminal_error_max`, or a failed plan. `saturated` holds one flag
// per tick of spacing `tick`, set when u^d exits by more than
// `saturation_tolerance`.
FallReason DetectFall(const std::vector<bool>& saturated, double tick,
                      double terminal_error, bool planner_failed,
                      const SimConfig& config);

void WriteTraceCsv(std::ostream& out, const std::vector<TraceRow>& trace);

// ---- Stability map ----

struct StabilityCell {
  double magnitude = 1.0;
  double duration = 0.0;
  bool infeasible_parameter = false;  // the wave alone would overrun the path
  bool stable = false;
  FallReason reason = FallReason::kNone;
  int failed_step = -1;
};

struct StabilityMap {
  Strategy strategy = Strategy::kOnlinePlanning;
  std::vector<double> magnitudes;
  std::vector<double> durations;
  std::vector<StabilityCell> cells;  // magnitude-major

  const StabilityCell& at(std::size_t m, std::size_t d) const {
    return cells[m * durations.size() + d];
  }
};

StabilityMap RunStabilityMap(const Simulator& sim, Strategy strategy,
                             const std::vector<double>& magnitudes,
                             const std::vector<double>& durations, int n_steps,
                             int threads = 0);

// True when every stable cell of `b` is stable in `a` and `a` has at least
// one more. Both maps must share the grid.
bool StrictlyDominates(const StabilityMap& a, const StabilityMap& b);

void WriteStabilityCsv(std::ostream& out, const StabilityMap& map);
void WriteStabilitySvg(std::ostream& out, const std::vector<StabilityMap>& panels);

// ---- Solver benchmark ----

struct BenchCase {
  BoundaryConditions bc;
  double t_target = 0.0;
  double hint = 0.0;  // s, warm start; 0 for none
};

struct BenchStats {
  std::size_t cases = 0;
  double min = 0.0;   // s
  double max = 0.0;
  double mean = 0.0;
  double p50 = 0.0;
  double p99 = 0.0;
  double fast_path_fraction = 0.0;
  int failures = 0;   // balance-unrecoverable cases
};

// Planning instances logged from closed-loop OP walks under a mix of
// patient profiles, truncated to `n_cases`.
std::vector<BenchCase> RecordCorpus(const Simulator& sim, std::size_t n_cases);
void SaveCorpus(std::ostream& out, const std::vector<BenchCase>& corpus);
std::vector<BenchCase> LoadCorpus(std::istream& in);

BenchStats BenchSolver(const std::vector<BenchCase>& corpus,
                       const PendulumParams& params, const PlannerOptions& options);

}  // namespace exo

#endif  // EXO_SIM_H_
