#include "exo/sim.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace exo {
namespace {

GaitPhase Opposite(GaitPhase p) {
  switch (p) {
    case GaitPhase::kSingleLeft: return GaitPhase::kSingleRight;
    case GaitPhase::kSingleRight: return GaitPhase::kSingleLeft;
    case GaitPhase::kDouble: break;
  }
  return p;
}

// Placement of a step's support-foot frame in the world: a translation and
// a reflection of y on every other step.
struct WorldFrame {
  Vec2 origin = Vec2::Zero();
  double sign = 1.0;

  Vec2 Point(const Vec2& p) const { return origin + Vec2(p.x(), sign * p.y()); }
  void Advance(const Vec2& foothold) {
    origin += Vec2(foothold.x(), sign * foothold.y());
    sign = -sign;
  }
};

Vec2 PointToNextStepFrame(const Vec2& p, const Vec2& foothold) {
  return Vec2(p.x() - foothold.x(), -(p.y() - foothold.y()));
}

double PlanTerminalError(const ReplanSolution& sol, const LipState& xf) {
  const LipState& end = sol.states.back();
  return (end.com - xf.com).norm() + (end.com_vel - xf.com_vel).norm();
}

double PlanCopExit(const ReplanSolution& sol, const SupportPolygon& poly) {
  double worst = 0.0;
  for (const Vec2& u : sol.cop.values) worst = std::max(worst, poly.ExitDistance(u));
  return worst;
}

// Mutable state of one walk. All geometry is in the current step's
// support-foot frame; the trace is written in the world frame.
class WalkRunner {
 public:
  WalkRunner(const NominalGait& gait, const SimConfig& cfg, const SwingPath& path,
             double nominal_rate, Strategy strategy, const PatientModel& patient)
      : gait_(gait),
        cfg_(cfg),
        path_(path),
        rescaler_(gait, 0, path),
        nominal_rate_(nominal_rate),
        strategy_(strategy),
        patient_(patient),
        ss_(gait.single_support(0)),
        ds_(gait.leading_double_support()),
        stance_(StanceFoot(cfg.foot, ss_.kind)) {
    const double t0 = ds_ ? ds_->start : ss_.start;
    const LipState first = gait.StateAt(t0);
    xf_ = gait.StateAt(ss_.end);
    x_ss0_ = gait.StateAt(ss_.start);
    foothold_ = Vec2(xf_.com.x() - first.com.x(), xf_.com.y() + first.com.y());
    ds_poly_ = DoubleSupportPolygon(stance_, foothold_);
    x_ = first;
    u_applied_ = gait.CopAt(t0);
    gains_ = SwingGains::Uniform(path.dims(), cfg.swing_kp, cfg.swing_kd);
    limits_ = {cfg.velocity_min_fraction * nominal_rate,
               cfg.velocity_max_fraction * nominal_rate};
  }

  WalkResult Run(int n_steps) {
    double prev_rate = nominal_rate_;
    for (int step = 0; step < n_steps; ++step) {
      StepOutcome out;
      out.step = step;
      step_ = step;
      ss_label_ = step % 2 == 0 ? ss_.kind : Opposite(ss_.kind);
      const double t_start = t_;
      sat_ticks_ = 0;
      reason_ = FallReason::kNone;
      max_integral_ = 0.0;
      max_ref_exit_ = 0.0;

      if (ds_) RunDoubleSupport(prev_rate);
      double ss_time = 0.0;
      if (reason_ == FallReason::kNone) ss_time = RunSingleSupport(&out);

      out.duration = t_ - t_start;
      out.max_integral = max_integral_;
      out.max_reference_exit = max_ref_exit_;
      if (reason_ == FallReason::kNone) {
        out.terminal_error = (x_.com - xf_.com).norm();
        out.terminal_state_error = out.terminal_error + (x_.com_vel - xf_.com_vel).norm();
        if (out.terminal_error > cfg_.terminal_error_max) reason_ = FallReason::kTerminalError;
      }
      out.reason = reason_;
      out.stable = reason_ == FallReason::kNone;
      result_.steps.push_back(out);
      if (!out.stable) break;

      prev_rate = path_.length() / ss_time;
      x_ = ToNextStepFrame(x_, foothold_);
      u_applied_ = PointToNextStepFrame(u_applied_, foothold_);
      stab_.integral.y() = -stab_.integral.y();
      frame_.Advance(foothold_);
    }
    return std::move(result_);
  }

 private:
  struct Reference {
    LipState state;
    Vec2 cop = Vec2::Zero();
    Vec2 dcm_rate = Vec2::Zero();
  };

  Reference FromPlan(const ReplanSolution& sol, double tau) const {
    Reference r;
    r.state = sol.StateAt(tau, cfg_.params);
    r.cop = sol.cop.At(tau);
    r.dcm_rate = cfg_.params.omega * (ToDcm(r.state, cfg_.params).dcm - r.cop);
    return r;
  }

  // Plans inside the shrunk polygon so the stabilizer keeps some authority,
  // and falls back to the whole polygon when that is not enough.
  ReplanSolution Plan(const LipState& x0, const LipState& xf,
                      const SupportPolygon& poly, double t_target,
                      const PathProgress& progress, BoundaryConditions* used,
                      std::optional<double> hint = std::nullopt) {
    *used = {x0, xf, poly.Shrunk(cfg_.plan_margin)};
    try {
      return SolveProblem1(*used, t_target, cfg_.params, cfg_.planner, progress, hint);
    } catch (const BalanceUnrecoverableError&) {
      if (cfg_.plan_margin >= 1.0) throw;
    }
    *used = {x0, xf, poly};
    return SolveProblem1(*used, t_target, cfg_.params, cfg_.planner, progress, hint);
  }

  void RecordPlan(const ReplanSolution& sol, const BoundaryConditions& bc, bool ds,
                  std::optional<double> hint = std::nullopt) {
    PlannerRecord rec;
    rec.step = step_;
    rec.double_support = ds;
    rec.bc = bc;
    rec.t_target = sol.t_target;
    rec.t_opt = sol.t_opt;
    rec.hint = hint.value_or(0.0);
    rec.respected = sol.respected;
    rec.fast_path = sol.stats.fast_path;
    rec.cpu_seconds = sol.stats.cpu_seconds;
    rec.max_cop_exit = PlanCopExit(sol, bc.polygon);
    rec.terminal_error = PlanTerminalError(sol, bc.xf);
    result_.plans.push_back(rec);
  }

  // Stabilizer, actuation, plant and bookkeeping for one tick of length dt.
  // `row` arrives with the schedule fields filled in.
  void ApplyControl(const Reference& ref, const SupportPolygon& poly, double dt,
                    TraceRow row) {
    StabilizerConfig sc = cfg_.stabilizer;
    sc.period = dt;
    const StabilizerOutput out = DcmControl(x_, ref.state, ref.dcm_rate, ref.cop,
                                            u_applied_, poly, sc, cfg_.params, &stab_);
    if (cfg_.actuation_lag > 0.0) {
      u_applied_ += (dt / (cfg_.actuation_lag + dt)) * (out.command - u_applied_);
    } else {
      u_applied_ = out.command;
    }
    max_integral_ = std::max(max_integral_, stab_.integral.norm());
    max_ref_exit_ = std::max(max_ref_exit_, poly.ExitDistance(ref.cop));

    if (cfg_.record_trace) {
      row.t = t_;
      row.com = frame_.Point(x_.com);
      row.dcm = frame_.Point(ToDcm(x_, cfg_.params).dcm);
      row.u_star = frame_.Point(ref.cop);
      row.u_cmd = frame_.Point(out.desired);
      row.u_applied = frame_.Point(u_applied_);
      result_.trace.push_back(row);
    }

    x_ = Propagate(x_, u_applied_, dt, cfg_.params);
    t_ += dt;

    const bool saturated = poly.ExitDistance(out.desired) > cfg_.saturation_tolerance;
    sat_ticks_ = saturated ? sat_ticks_ + 1 : 0;
    if (sat_ticks_ * cfg_.tick >= cfg_.saturation_timeout - 1e-9) {
      reason_ = FallReason::kCopSaturationTimeout;
    }
    if (!x_.IsFinite() || (x_.com - stance_.center()).norm() > cfg_.divergence_limit) {
      reason_ = FallReason::kTerminalError;
    }
  }

  // Reference computed once at the start of the phase. Patient input is
  // ignored; the target duration follows the mean speed of the previous
  // single support.
  void RunDoubleSupport(double prev_rate) {
    const double ratio = prev_rate / nominal_rate_;
    const double nominal = ds_->end - ds_->start;
    const double t_target = nominal / ratio;
    TraceRow row;
    row.phase = GaitPhase::kDouble;

    if (strategy_ == Strategy::kOnlinePlanning) {
      BoundaryConditions bc;
      ReplanSolution sol;
      try {
        sol = Plan(x_, x_ss0_, ds_poly_, t_target, {}, &bc);
      } catch (const BalanceUnrecoverableError&) {
        reason_ = FallReason::kPlannerInfeasible;
        return;
      }
      RecordPlan(sol, bc, true);
      for (double tau = 0.0; tau < sol.t_opt - 1e-12 && reason_ == FallReason::kNone;) {
        const double dt = std::min(cfg_.tick, sol.t_opt - tau);
        row.t_target = t_target - tau;
        row.t_opt = sol.t_opt - tau;
        row.respected = sol.respected;
        ApplyControl(FromPlan(sol, tau), ds_poly_, dt, row);
        tau += dt;
      }
      return;
    }

    // Nominal double support replayed at the previous step's speed ratio.
    const double w2 = cfg_.params.omega * cfg_.params.omega;
    for (double tau = 0.0; tau < t_target - 1e-12 && reason_ == FallReason::kNone;) {
      const double dt = std::min(cfg_.tick, t_target - tau);
      const double tg = ds_->start + ratio * tau;
      Reference ref;
      ref.state = gait_.StateAt(tg);
      ref.state.com_vel *= ratio;
      const Vec2 acc = ratio * ratio * w2 * (ref.state.com - gait_.CopAt(tg));
      ref.cop = CopFromAccel(ref.state.com, acc, cfg_.params);
      ref.dcm_rate = ref.state.com_vel + acc / cfg_.params.omega;
      row.t_target = row.t_opt = t_target - tau;
      ApplyControl(ref, ds_poly_, dt, row);
      tau += dt;
    }
  }

  // Returns the single-support duration.
  double RunSingleSupport(StepOutcome* out) {
    const double length = path_.length();
    const double w = cfg_.params.omega;
    std::optional<SwingPlant> plant;
    if (patient_.kind() == PatientModel::Kind::kTangentTorque) {
      const PathPoint p0 = path_.Eval(0.0);
      plant.emplace(Eigen::VectorXd::Constant(path_.dims(), cfg_.swing_inertia),
                    SwingJointState{p0.position, p0.tangent * nominal_rate_});
    }
    TargetVelocityFilter filter(cfg_.velocity_filter);
    std::optional<ReplanSolution> frozen;
    double frozen_at = 0.0;
    std::optional<double> hint;
    std::optional<ReplanSolution> previous;
    double previous_at = 0.0;
    double sigma = 0.0, tau = 0.0;
    int ticks = 0, respected_ticks = 0;
    TraceRow row;
    row.phase = ss_label_;

    while (reason_ == FallReason::kNone) {
      double target;
      if (plant) {
        const TargetVelocity est =
            EstimateTargetVelocity(path_, sigma, plant->state(), gains_, limits_);
        target = filter.Update(est.saturated, cfg_.tick);
      } else {
        target = std::clamp(patient_.SpeedFraction(step_, tau) * nominal_rate_,
                            limits_.min, limits_.max);
      }
      const double t_target = TargetTime(std::min(sigma, length), target, length);

      Reference ref;
      double rate = target;
      double t_opt = t_target;
      bool respected = true;
      if (strategy_ == Strategy::kTimeRescaling) {
        const TrackingReference tr = rescaler_.Eval(sigma, rate, cfg_.tick, cfg_.params);
        ref.state = tr.state;
        ref.cop = tr.cop;
        ref.dcm_rate = tr.dcm_rate;
      } else {
        if (!frozen) {
          BoundaryConditions bc;
          ReplanSolution sol;
          bool solved = true;
          try {
            sol = Plan(x_, xf_, stance_, t_target, PathProgress{sigma, length}, &bc, hint);
          } catch (const BalanceUnrecoverableError&) {
            solved = false;
          }
          if (!solved) {
            // The feasible set can close up near the end of the step once the
            // plan rides its boundary. Keep following the last plan.
            if (!previous) {
              reason_ = FallReason::kPlannerInfeasible;
              break;
            }
            frozen = std::move(previous);
            frozen_at = previous_at;
          } else {
            RecordPlan(sol, bc, false, hint);
            hint = sol.t_opt - cfg_.tick;
          }
          if (solved && sol.t_opt <= cfg_.freeze_time) {
            frozen = std::move(sol);
            frozen_at = tau;
          } else if (solved) {
            rate = sol.sigma_rate;
            t_opt = sol.t_opt;
            respected = sol.respected;
            // Replanning from the measured state absorbs past tracking
            // error, so the integral restarts with the new reference.
            stab_.integral.setZero();
            ref.state = x_;
            ref.cop = sol.cop.values.front();
            ref.dcm_rate = w * (ToDcm(x_, cfg_.params).dcm - ref.cop);
            previous = std::move(sol);
            previous_at = tau;
          }
        }
        if (frozen) {
          // Close to the end the remaining plan is followed open loop.
          const double e = tau - frozen_at;
          t_opt = frozen->t_opt - e;
          rate = (length - sigma) / t_opt;
          respected = std::abs(t_opt - t_target) <= cfg_.planner.time_tol;
          ref = FromPlan(*frozen, e);
        }
      }

      double dt = cfg_.tick;
      bool last = false;
      if (sigma + rate * dt >= length - 1e-12) {
        dt = (length - sigma) / rate;
        last = true;
      }

      if (plant) {
        const PathPoint p = path_.Eval(sigma);
        const Eigen::VectorXd& qd = plant->state().qd;
        const double v_des = patient_.desired_fraction() * nominal_rate_;
        const Eigen::VectorXd assist =
            patient_.stiffness() * p.tangent * (v_des - p.tangent.dot(qd));
        plant->Step(SwingTorque(path_, sigma, rate, plant->state(), gains_) + assist, dt);
        row.swing_error =
            (plant->state().q - path_.Eval(sigma + rate * dt).position).norm();
      }

      ++ticks;
      respected_ticks += respected ? 1 : 0;
      row.sigma = sigma;
      row.sigma_dot_target = target;
      row.sigma_dot_opt = rate;
      row.t_target = t_target;
      row.t_opt = t_opt;
      row.respected = respected;
      ApplyControl(ref, stance_, dt, row);
      sigma = last ? length : sigma + rate * dt;
      tau += dt;
      if (last) break;
    }
    out->respected_fraction = ticks ? static_cast<double>(respected_ticks) / ticks : 1.0;
    return tau;
  }

  const NominalGait& gait_;
  const SimConfig& cfg_;
  const SwingPath& path_;
  TimeRescaler rescaler_;
  double nominal_rate_;
  Strategy strategy_;
  const PatientModel& patient_;
  PhaseSegment ss_;
  std::optional<PhaseSegment> ds_;
  SupportPolygon stance_;
  SupportPolygon ds_poly_;
  LipState xf_, x_ss0_;
  Vec2 foothold_;
  SwingGains gains_;
  VelocityLimits limits_;

  LipState x_;
  Vec2 u_applied_;
  StabilizerState stab_;
  WorldFrame frame_;
  double t_ = 0.0;
  int step_ = 0;
  GaitPhase ss_label_ = GaitPhase::kSingleLeft;
  int sat_ticks_ = 0;
  FallReason reason_ = FallReason::kNone;
  double max_integral_ = 0.0;
  double max_ref_exit_ = 0.0;
  WalkResult result_;
};

std::vector<double> ParseNumbers(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v)) {
      throw std::invalid_argument("profile: bad number '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string_view StrategyName(Strategy s) {
  return s == Strategy::kTimeRescaling ? "tr" : "op";
}

std::optional<Strategy> ParseStrategy(std::string_view name) {
  if (name == "tr") return Strategy::kTimeRescaling;
  if (name == "op") return Strategy::kOnlinePlanning;
  return std::nullopt;
}

PatientModel PatientModel::Nominal() { return PatientModel(); }

PatientModel PatientModel::Square(double magnitude, double duration, double onset) {
  if (!(magnitude > 0.0) || !(duration >= 0.0) || !(onset >= 0.0)) {
    throw std::invalid_argument("profile: need magnitude > 0, duration >= 0, onset >= 0");
  }
  PatientModel p;
  p.magnitude_ = magnitude;
  p.duration_ = duration;
  p.onset_ = onset;
  return p;
}

PatientModel PatientModel::Alternating(double delta, double duration, double onset) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("profile: alternating delta must be in [0, 1)");
  }
  PatientModel p = Square(1.0 + delta, duration, onset);
  p.alternating_ = true;
  return p;
}

PatientModel PatientModel::TangentTorque(double speed_fraction, double stiffness) {
  if (!(speed_fraction > 0.0) || !(stiffness >= 0.0)) {
    throw std::invalid_argument("profile: need speed fraction > 0 and stiffness >= 0");
  }
  PatientModel p;
  p.kind_ = Kind::kTangentTorque;
  p.magnitude_ = speed_fraction;
  p.stiffness_ = stiffness;
  return p;
}

PatientModel PatientModel::Parse(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  const std::string_view head = spec.substr(0, colon);
  const std::vector<double> args =
      colon == std::string_view::npos ? std::vector<double>{}
                                      : ParseNumbers(spec.substr(colon + 1));
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) {
      throw std::invalid_argument("profile: wrong argument count in '" +
                                  std::string(spec) + "'");
    }
  };
  if (head == "nominal") {
    need(0, 0);
    return Nominal();
  }
  if (head == "square") {
    need(2, 3);
    return Square(args[0], args[1], args.size() > 2 ? args[2] : 0.0);
  }
  if (head == "alternating") {
    need(2, 3);
    return Alternating(args[0], args[1], args.size() > 2 ? args[2] : 0.0);
  }
  if (head == "torque") {
    need(2, 2);
    return TangentTorque(args[0], args[1]);
  }
  throw std::invalid_argument("profile: unknown kind '" + std::string(head) + "'");
}

std::string PatientModel::Describe() const {
  std::ostringstream s;
  if (kind_ == Kind::kTangentTorque) {
    s << "torque:" << magnitude_ << ',' << stiffness_;
  } else if (alternating_) {
    s << "alternating:" << magnitude_ - 1.0 << ',' << duration_ << ',' << onset_;
  } else if (duration_ > 0.0 && magnitude_ != 1.0) {
    s << "square:" << magnitude_ << ',' << duration_ << ',' << onset_;
  } else {
    s << "nominal";
  }
  return s.str();
}

double PatientModel::SpeedFraction(int step, double t) const {
  if (kind_ == Kind::kTangentTorque) return magnitude_;
  if (t < onset_ || t >= onset_ + duration_) return 1.0;
  if (alternating_ && step % 2 == 1) return 2.0 - magnitude_;
  return magnitude_;
}

SwingPlant::SwingPlant(Eigen::VectorXd inertia, SwingJointState state)
    : inertia_(std::move(inertia)), state_(std::move(state)) {
  if (inertia_.size() != state_.q.size() || !(inertia_.minCoeff() > 0.0)) {
    throw std::invalid_argument("swing plant: inertias must be positive");
  }
}

void SwingPlant::Step(const Eigen::VectorXd& torque, double dt) {
  state_.qd += dt * torque.cwiseQuotient(inertia_);
  state_.q += dt * state_.qd;
}

std::string_view FallReasonName(FallReason r) {
  switch (r) {
    case FallReason::kNone: return "none";
    case FallReason::kCopSaturationTimeout: return "cop-saturation-timeout";
    case FallReason::kTerminalError: return "terminal-error";
    case FallReason::kPlannerInfeasible: return "planner-infeasible";
  }
  return "none";
}

void SimConfig::Validate() const {
  if (!(tick > 0.0) || !(actuation_lag >= 0.0) || !(freeze_time >= 0.0) ||
      !(swing_kp > 0.0) || !(swing_kd > 0.0) || !(swing_inertia > 0.0) ||
      !(velocity_min_fraction > 0.0) ||
      !(velocity_max_fraction > velocity_min_fraction) || !(velocity_filter >= 0.0) ||
      !(saturation_timeout > 0.0) || !(saturation_tolerance >= 0.0) ||
      !(terminal_error_max > 0.0) ||
      !(divergence_limit > 0.0) || !(plan_margin > 0.0 && plan_margin <= 1.0) || !(stabilizer.windup_bound > 0.0)) {
    throw std::invalid_argument("sim config: value out of range");
  }
  stabilizer.gains.Validate();
  planner.Validate();
  if (freeze_time >= planner.t_max) {
    throw std::invalid_argument("sim config: freeze_time must be below t_max");
  }
}

bool WalkResult::fallen() const {
  return std::any_of(steps.begin(), steps.end(), [](const StepOutcome& s) { return !s.stable; });
}

Simulator::Simulator(NominalGait gait, SimConfig config)
    : gait_(std::move(gait)), config_(std::move(config)) {
  config_.Validate();
  path_ = BuildSwingPath(gait_, 0, config_.path);
  nominal_rate_ = path_.length() / single_support_duration();
}

double Simulator::single_support_duration() const {
  const PhaseSegment& ss = gait_.single_support(0);
  return ss.end - ss.start;
}

WalkResult Simulator::RunWalk(Strategy strategy, const PatientModel& patient,
                              int n_steps) const {
  if (n_steps < 1) throw std::invalid_argument("walk: need at least one step");
  WalkRunner runner(gait_, config_, path_, nominal_rate_, strategy, patient);
  return runner.Run(n_steps);
}

FallReason DetectFall(const std::vector<bool>& saturated, double tick,
                      double terminal_error, bool planner_failed,
                      const SimConfig& config) {
  if (planner_failed) return FallReason::kPlannerInfeasible;
  int run = 0;
  for (bool s : saturated) {
    run = s ? run + 1 : 0;
    if (run * tick >= config.saturation_timeout - 1e-9) {
      return FallReason::kCopSaturationTimeout;
    }
  }
  if (terminal_error > config.terminal_error_max) return FallReason::kTerminalError;
  return FallReason::kNone;
}

void WriteTraceCsv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "t,sigma,sigma_dot_t,sigma_dot_opt,T_t,T_opt,respected,com_x,com_y,"
         "dcm_x,dcm_y,u_star_x,u_star_y,u_cmd_x,u_cmd_y,u_applied_x,u_applied_y,"
         "phase\n";
  out << std::setprecision(10);
  for (const TraceRow& r : trace) {
    out << r.t << ',' << r.sigma << ',' << r.sigma_dot_target << ','
        << r.sigma_dot_opt << ',' << r.t_target << ',' << r.t_opt << ','
        << (r.respected ? 1 : 0) << ',' << r.com.x() << ',' << r.com.y() << ','
        << r.dcm.x() << ',' << r.dcm.y() << ',' << r.u_star.x() << ','
        << r.u_star.y() << ',' << r.u_cmd.x() << ',' << r.u_cmd.y() << ','
        << r.u_applied.x() << ',' << r.u_applied.y() << ',' << PhaseName(r.phase)
        << '\n';
  }
}

StabilityMap RunStabilityMap(const Simulator& sim, Strategy strategy,
                             const std::vector<double>& magnitudes,
                             const std::vector<double>& durations, int n_steps,
                             int threads) {
  if (magnitudes.empty() || durations.empty()) {
    throw std::invalid_argument("stability map: empty grid");
  }
  SimConfig quiet = sim.config();
  quiet.record_trace = false;
  const Simulator runner(sim.gait(), quiet);
  const double t_ss = sim.single_support_duration();

  StabilityMap map;
  map.strategy = strategy;
  map.magnitudes = magnitudes;
  map.durations = durations;
  map.cells.resize(magnitudes.size() * durations.size());
  for (std::size_t m = 0; m < magnitudes.size(); ++m) {
    for (std::size_t d = 0; d < durations.size(); ++d) {
      StabilityCell& c = map.cells[m * durations.size() + d];
      c.magnitude = magnitudes[m];
      c.duration = durations[d];
      c.infeasible_parameter = magnitudes[m] * durations[d] > t_ss + 1e-12;
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < map.cells.size(); i = next++) {
      StabilityCell& c = map.cells[i];
      if (c.infeasible_parameter) continue;
      const WalkResult r =
          runner.RunWalk(strategy, PatientModel::Square(c.magnitude, c.duration), n_steps);
      c.stable = !r.fallen();
      if (!c.stable) {
        c.reason = r.steps.back().reason;
        c.failed_step = r.steps.back().step;
      }
    }
  };
  int n = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, static_cast<int>(map.cells.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return map;
}

bool StrictlyDominates(const StabilityMap& a, const StabilityMap& b) {
  if (a.cells.size() != b.cells.size()) {
    throw std::invalid_argument("stability map: grids differ");
  }
  bool extra = false;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (b.cells[i].stable && !a.cells[i].stable) return false;
    if (a.cells[i].stable && !b.cells[i].stable) extra = true;
  }
  return extra;
}

void WriteStabilityCsv(std::ostream& out, const StabilityMap& map) {
  out << "strategy,magnitude,duration,status,reason,failed_step\n";
  for (const StabilityCell& c : map.cells) {
    const char* status = c.infeasible_parameter ? "infeasible" : c.stable ? "stable" : "fallen";
    out << StrategyName(map.strategy) << ',' << c.magnitude << ',' << c.duration << ','
        << status << ',' << FallReasonName(c.reason) << ',' << c.failed_step << '\n';
  }
}

void WriteStabilitySvg(std::ostream& out, const std::vector<StabilityMap>& panels) {
  const double cell = 36.0, left = 70.0, top = 40.0, gap = 60.0;
  std::size_t rows = 0, cols = 0;
  for (const StabilityMap& p : panels) {
    rows = std::max(rows, p.magnitudes.size());
    cols = std::max(cols, p.durations.size());
  }
  const double panel_w = cols * cell;
  const double width = left + panels.size() * (panel_w + gap);
  const double height = top + rows * cell + 50.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const StabilityMap& p = panels[k];
    const double x0 = left + k * (panel_w + gap);
    out << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"20\" text-anchor=\"middle\""
        << " font-size=\"14\">" << (p.strategy == Strategy::kOnlinePlanning ? "OP" : "TR")
        << "</text>\n";
    // Highest magnitude on top.
    for (std::size_t m = 0; m < p.magnitudes.size(); ++m) {
      const double y = top + (p.magnitudes.size() - 1 - m) * cell;
      out << "<text x=\"" << x0 - 6 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"end\">" << std::lround(p.magnitudes[m] * 100) << "%</text>\n";
      for (std::size_t d = 0; d < p.durations.size(); ++d) {
        const StabilityCell& c = p.at(m, d);
        const char* fill = c.infeasible_parameter ? "#ffffff" : c.stable ? "#3a9d4a" : "#c8392f";
        out << "<rect x=\"" << x0 + d * cell << "\" y=\"" << y << "\" width=\"" << cell
            << "\" height=\"" << cell << "\" fill=\"" << fill
            << "\" stroke=\"#555\" stroke-width=\"0.5\"/>\n";
      }
    }
    const double yb = top + p.magnitudes.size() * cell;
    for (std::size_t d = 0; d < p.durations.size(); ++d) {
      out << "<text x=\"" << x0 + (d + 0.5) * cell << "\" y=\"" << yb + 14
          << "\" text-anchor=\"middle\">" << std::lround(p.durations[d] * 1000) << "</text>\n";
    }
    out << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"" << yb + 34
        << "\" text-anchor=\"middle\">duration (ms)</text>\n";
  }
  out << "</svg>\n";
}

std::vector<BenchCase> RecordCorpus(const Simulator& sim, std::size_t n_cases) {
  SimConfig quiet = sim.config();
  quiet.record_trace = false;
  const Simulator runner(sim.gait(), quiet);
  const std::vector<PatientModel> mix = {
      PatientModel::Nominal(),           PatientModel::Square(0.6, 0.3),
      PatientModel::Alternating(0.5, 0.3), PatientModel::Square(0.5, 0.9),
      PatientModel::Square(1.3, 0.3),    PatientModel::Square(0.7, 0.6),
  };
  std::vector<BenchCase> all;
  for (const PatientModel& p : mix) {
    const WalkResult r = runner.RunWalk(Strategy::kOnlinePlanning, p, 10);
    for (const PlannerRecord& rec : r.plans) all.push_back({rec.bc, rec.t_target, rec.hint});
  }
  if (all.size() <= n_cases) return all;
  // Even subsample, so every profile is represented.
  std::vector<BenchCase> out;
  out.reserve(n_cases);
  for (std::size_t i = 0; i < n_cases; ++i) out.push_back(all[i * all.size() / n_cases]);
  return out;
}

void SaveCorpus(std::ostream& out, const std::vector<BenchCase>& corpus) {
  out << "x0_cx,x0_cy,x0_vx,x0_vy,xf_cx,xf_cy,xf_vx,xf_vy,"
         "poly_cx,poly_cy,poly_hx,poly_hy,t_target,hint\n";
  out << std::setprecision(17);
  for (const BenchCase& c : corpus) {
    const BoundaryConditions& b = c.bc;
    out << b.x0.com.x() << ',' << b.x0.com.y() << ',' << b.x0.com_vel.x() << ','
        << b.x0.com_vel.y() << ',' << b.xf.com.x() << ',' << b.xf.com.y() << ','
        << b.xf.com_vel.x() << ',' << b.xf.com_vel.y() << ','
        << b.polygon.center().x() << ',' << b.polygon.center().y() << ','
        << b.polygon.half_extents().x() << ',' << b.polygon.half_extents().y() << ','
        << c.t_target << ',' << c.hint << '\n';
  }
}

std::vector<BenchCase> LoadCorpus(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("corpus: empty file");
  std::vector<BenchCase> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> v;
    try {
      v = ParseNumbers(line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("corpus: row " + std::to_string(row) + ": " + e.what());
    }
    if (v.size() != 13 && v.size() != 14) {
      throw std::invalid_argument("corpus: row " + std::to_string(row) +
                                  ": expected 13 or 14 fields");
    }
    BenchCase c;
    c.bc.x0 = {Vec2(v[0], v[1]), Vec2(v[2], v[3])};
    c.bc.xf = {Vec2(v[4], v[5]), Vec2(v[6], v[7])};
    try {
      c.bc.polygon = SupportPolygon(Vec2(v[8], v[9]), Vec2(v[10], v[11]));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("corpus: row " + std::to_string(row) + ": " + e.what());
    }
    c.t_target = v[12];
    c.hint = v.size() == 14 ? v[13] : 0.0;
    if (!(c.t_target > 0.0)) {
      throw std::invalid_argument("corpus: row " + std::to_string(row) +
                                  ": target time must be > 0");
    }
    out.push_back(c);
  }
  return out;
}

BenchStats BenchSolver(const std::vector<BenchCase>& corpus,
                       const PendulumParams& params, const PlannerOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("bench: empty corpus");
  std::vector<double> times;
  times.reserve(corpus.size());
  BenchStats st;
  std::size_t fast = 0;
  for (const BenchCase& c : corpus) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const std::optional<double> hint =
          c.hint > 0.0 ? std::optional<double>(c.hint) : std::nullopt;
      const ReplanSolution sol = SolveProblem1(c.bc, c.t_target, params, options, {}, hint);
      fast += sol.stats.fast_path ? 1 : 0;
    } catch (const BalanceUnrecoverableError&) {
      ++st.failures;
    }
    times.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  st.cases = times.size();
  std::sort(times.begin(), times.end());
  st.min = times.front();
  st.max = times.back();
  double sum = 0.0;
  for (double t : times) sum += t;
  st.mean = sum / times.size();
  auto pct = [&](double q) {
    const std::size_t i = static_cast<std::size_t>(std::ceil(q * times.size())) - 1;
    return times[std::min(i, times.size() - 1)];
  };
  st.p50 = pct(0.50);
  st.p99 = pct(0.99);
  st.fast_path_fraction = static_cast<double>(fast) / times.size();
  return st;
}

}  // namespace exo
