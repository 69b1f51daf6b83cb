#include "exo/replanner.h"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <sstream>

namespace exo {
namespace {

// Piecewise-constant CoP on N pieces of length D = T / N. With
// q = exp(-omega D), exact integration of the diagonalized axis dynamics
//   xi' = omega (xi - u),  zeta' = -omega (zeta - u)
// gives, after dividing by (1 - q),
//   sum_k q^k         u_k = (xi0 - q^N xi_f)     / (1 - q)
//   sum_k q^(N-1-k)   u_k = (zeta_f - q^N zeta0) / (1 - q)
// so the two constraint rows share the generators a_k = (q^k, q^(N-1-k)).
// Their angle increases strictly with k, which makes the set of reachable
// right-hand sides a zonotope whose boundary can be walked in order.
struct KnotBasis {
  KnotBasis(double duration, double omega, int n) : n(n), pw(n + 1) {
    const double step = omega * duration / n;
    q = std::exp(-step);
    one_minus_q = -std::expm1(-step);
    pw[0] = 1.0;
    for (int k = 1; k <= n; ++k) pw[k] = pw[k - 1] * q;
    geometric_sum = 0.0;
    for (int k = 0; k < n; ++k) geometric_sum += pw[k];
  }

  double gx(int k) const { return pw[k]; }
  double gy(int k) const { return pw[n - 1 - k]; }

  int n;
  double q = 0.0;
  double one_minus_q = 0.0;
  double geometric_sum = 0.0;  // sum_{k<N} q^k, both components of sum a_k
  std::vector<double> pw;
};

struct AxisProblem {
  double rx = 0.0;  // divergent-component row
  double ry = 0.0;  // convergent-component row
  double lo = 0.0;
  double hi = 0.0;
};

AxisProblem MakeAxis(const KnotBasis& b, double xi0, double zeta0, double xif,
                     double zetaf, double lo, double hi) {
  const double qn = b.pw[b.n];
  return {(xi0 - qn * xif) / b.one_minus_q, (zetaf - qn * zeta0) / b.one_minus_q,
          lo, hi};
}

// Signed slack of the right-hand side inside the reachable zonotope, in
// units of the half box width; >= 0 means feasible. For generator j the
// facet pair with normal perp(a_j) sits at +/- sum_k |a_j x a_k|, which the
// sorted order lets us accumulate with a prefix sum.
double AxisMargin(const KnotBasis& b, const AxisProblem& p) {
  const double half = 0.5 * (p.hi - p.lo);
  const double mid = 0.5 * (p.hi + p.lo);
  const double s = b.geometric_sum;
  const double px = (p.rx - mid * s) / half;
  const double py = (p.ry - mid * s) / half;
  double prefix_x = 0.0, prefix_y = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < b.n; ++j) {
    const double ax = b.gx(j), ay = b.gy(j);
    const double reach = (ax * s - ay * s) - 2.0 * (ax * prefix_y - ay * prefix_x);
    const double c = ax * py - ay * px;
    margin = std::min(margin, (reach - std::abs(c)) / std::sqrt(ax * ax + ay * ay));
    prefix_x += ax;
    prefix_y += ay;
  }
  return margin;
}

double MarginTolerance(const KnotBasis& b) { return 1e-12 * b.geometric_sum; }

// Dual of  min 1/2 |u|^2  s.t.  A u = r,  lo <= u <= hi:
//   u(lambda) = clamp(A' lambda),  grad psi = r - A u(lambda).
// Semismooth Newton with a backtracking line search on the concave dual.
bool SolveAxis(const KnotBasis& b, const AxisProblem& p, std::vector<double>* u,
               int max_iterations, int* iterations, double* residual) {
  const int n = b.n;
  u->assign(n, 0.0);
  Eigen::Matrix2d full = Eigen::Matrix2d::Zero();
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector2d a(b.gx(k), b.gy(k));
    full += a * a.transpose();
  }
  const Eigen::Vector2d r(p.rx, p.ry);
  const double tol = 1e-12 * (1.0 + r.norm());

  auto evaluate = [&](const Eigen::Vector2d& lambda, Eigen::Vector2d* grad,
                      Eigen::Matrix2d* hess, std::vector<double>* out) {
    double psi = lambda.dot(r);
    Eigen::Vector2d au = Eigen::Vector2d::Zero();
    if (hess) hess->setZero();
    for (int k = 0; k < n; ++k) {
      const double ax = b.gx(k), ay = b.gy(k);
      const double z = ax * lambda.x() + ay * lambda.y();
      const double v = std::clamp(z, p.lo, p.hi);
      psi += 0.5 * v * v - z * v;
      au.x() += ax * v;
      au.y() += ay * v;
      if (hess && v == z) {
        (*hess)(0, 0) += ax * ax;
        (*hess)(0, 1) += ax * ay;
        (*hess)(1, 1) += ay * ay;
      }
      if (out) (*out)[k] = v;
    }
    if (hess) (*hess)(1, 0) = (*hess)(0, 1);
    *grad = r - au;
    return psi;
  };

  Eigen::Vector2d lambda = full.ldlt().solve(r);
  Eigen::Vector2d grad;
  Eigen::Matrix2d hess;
  double psi = evaluate(lambda, &grad, &hess, u);
  int it = 0;
  for (; it < max_iterations && grad.norm() > tol; ++it) {
    const Eigen::Matrix2d metric = hess + 1e-9 * full;
    const Eigen::Vector2d dir = metric.ldlt().solve(grad);
    const double slope = grad.dot(dir);
    double step = 1.0;
    Eigen::Vector2d next_grad;
    double next_psi = 0.0;
    Eigen::Vector2d candidate;
    for (int ls = 0; ls < 60; ++ls) {
      candidate = lambda + step * dir;
      next_psi = evaluate(candidate, &next_grad, nullptr, nullptr);
      if (next_psi >= psi + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!(next_psi >= psi)) break;  // no ascent possible at this precision
    lambda = candidate;
    psi = evaluate(lambda, &grad, &hess, u);
  }
  *iterations += it;
  *residual = std::max(*residual, grad.norm() / (1.0 + r.norm()));
  return grad.norm() <= std::max(tol, 1e-9 * (1.0 + r.norm()));
}

struct AxisPair {
  AxisProblem axis[2];
};

AxisPair MakeProblems(const BoundaryConditions& bc, const KnotBasis& b,
                      const PendulumParams& params) {
  const DcmPair d0 = ToDcm(bc.x0, params);
  const DcmPair df = ToDcm(bc.xf, params);
  const Vec2 lo = bc.polygon.lower();
  const Vec2 hi = bc.polygon.upper();
  AxisPair out;
  for (int i = 0; i < 2; ++i) {
    out.axis[i] = MakeAxis(b, d0.dcm[i], d0.cdm[i], df.dcm[i], df.cdm[i], lo[i], hi[i]);
  }
  return out;
}

bool FeasibleWith(const KnotBasis& b, const AxisPair& problems) {
  const double tol = MarginTolerance(b);
  return AxisMargin(b, problems.axis[0]) >= -tol &&
         AxisMargin(b, problems.axis[1]) >= -tol;
}

void CheckDuration(double duration, int knots) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("replanner: duration must be > 0");
  }
  if (knots < 16) throw std::invalid_argument("replanner: need at least 16 knots");
}

class FeasibilityProbe {
 public:
  FeasibilityProbe(const BoundaryConditions& bc, const PendulumParams& params,
                   int knots)
      : bc_(bc), params_(params), knots_(knots) {}

  bool operator()(double t) {
    ++checks_;
    const KnotBasis b(t, params_.omega, knots_);
    return FeasibleWith(b, MakeProblems(bc_, b, params_));
  }
  // Smaller axis margin, shifted so that feasibility is >= 0.
  double Margin(double t) {
    ++checks_;
    const KnotBasis b(t, params_.omega, knots_);
    const AxisPair problems = MakeProblems(bc_, b, params_);
    return std::min(AxisMargin(b, problems.axis[0]), AxisMargin(b, problems.axis[1])) +
           MarginTolerance(b);
  }
  int checks() const { return checks_; }

 private:
  const BoundaryConditions& bc_;
  const PendulumParams& params_;
  int knots_;
  int checks_ = 0;
};

// Shrinks [feasible, infeasible] (either order) to `tol`; returns the
// feasible end.
double BisectBoundary(FeasibilityProbe& probe, double feasible,
                      double infeasible, double tol) {
  while (std::abs(infeasible - feasible) > tol) {
    const double mid = 0.5 * (feasible + infeasible);
    if (probe(mid)) {
      feasible = mid;
    } else {
      infeasible = mid;
    }
  }
  return feasible;
}

// Geometric scan grid t_min * r^i, ending exactly at t_max. Feasible
// intervals get narrower as the remaining time shrinks, so the spacing is
// kept proportional to the duration.
struct ScanGrid {
  explicit ScanGrid(const PlannerOptions& opt)
      : t_min(opt.t_min), t_max(opt.t_max) {
    log_span = std::log(t_max / t_min);
    m = std::max(1, static_cast<int>(std::ceil(log_span / std::log1p(opt.scan_ratio) - 1e-9)));
  }
  double operator()(int i) const {
    return i == m ? t_max : t_min * std::exp(log_span * i / m);
  }
  // Largest index whose point is strictly below t, or -1.
  int Below(double t) const {
    if (!(t > t_min)) return -1;
    int i = std::clamp(static_cast<int>(std::floor(m * std::log(t / t_min) / log_span)), 0, m);
    while (i >= 0 && (*this)(i) >= t) --i;
    while (i + 1 <= m && (*this)(i + 1) < t) ++i;
    return i;
  }

  double t_min, t_max, log_span;
  int m;
};

// Golden-section search for the margin maximum on [a, b]; returns the
// first point found with a non-negative margin.
std::optional<double> FindFeasibleNear(FeasibilityProbe& probe, double a, double b,
                                       double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = probe.Margin(x1), f2 = probe.Margin(x2);
  while (b - a > 0.1 * tol) {
    if (f1 >= 0.0) return x1;
    if (f2 >= 0.0) return x2;
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = probe.Margin(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = probe.Margin(x2);
    }
  }
  return std::nullopt;
}

FeasibleTimeSet ScanFeasibleTimes(FeasibilityProbe& probe,
                                  const PlannerOptions& opt) {
  const ScanGrid grid(opt);
  const int m = grid.m;
  std::vector<double> margin(m + 1);
  for (int i = 0; i <= m; ++i) margin[i] = probe.Margin(grid(i));
  // Intervals narrower than the grid spacing hide between infeasible
  // points; search around every discrete local maximum of the margin.
  std::vector<std::pair<double, int>> extra;  // feasible point, grid index
  for (int i = 0; i <= m; ++i) {
    if (margin[i] >= 0.0) continue;
    const double left = i > 0 ? margin[i - 1] : -std::numeric_limits<double>::infinity();
    const double right = i < m ? margin[i + 1] : -std::numeric_limits<double>::infinity();
    if (left >= 0.0 || right >= 0.0 || margin[i] < left || margin[i] < right) continue;
    const double a = grid(std::max(i - 1, 0)), b = grid(std::min(i + 1, m));
    if (const std::optional<double> t = FindFeasibleNear(probe, a, b, opt.time_tol)) {
      extra.emplace_back(*t, i);
    }
  }
  FeasibleTimeSet out;
  std::size_t next_extra = 0;
  auto add_isolated = [&](double t, int i) {
    // Bracketed by infeasible grid points on both sides.
    TimeInterval iv;
    iv.lo = BisectBoundary(probe, t, grid(std::max(i - 1, 0)), opt.time_tol);
    iv.hi = BisectBoundary(probe, t, grid(std::min(i + 1, m)), opt.time_tol);
    out.intervals.push_back(iv);
  };
  for (int i = 0; i <= m; ++i) {
    while (next_extra < extra.size() && extra[next_extra].second <= i) {
      add_isolated(extra[next_extra].first, extra[next_extra].second);
      ++next_extra;
    }
    if (margin[i] < 0.0) continue;
    const int start = i;
    while (i + 1 <= m && margin[i + 1] >= 0.0) ++i;
    const int end = i;
    TimeInterval iv;
    iv.lo = start == 0 ? grid(0)
                       : BisectBoundary(probe, grid(start), grid(start - 1), opt.time_tol);
    iv.hi = end == m ? grid(m)
                     : BisectBoundary(probe, grid(end), grid(end + 1), opt.time_tol);
    out.intervals.push_back(iv);
  }
  while (next_extra < extra.size()) {
    add_isolated(extra[next_extra].first, extra[next_extra].second);
    ++next_extra;
  }
  // A bracket spans two grid cells, so an isolated interval can touch
  // another one found the same way; merge overlaps.
  std::sort(out.intervals.begin(), out.intervals.end(),
            [](const TimeInterval& x, const TimeInterval& y) { return x.lo < y.lo; });
  std::vector<TimeInterval> merged;
  for (const TimeInterval& iv : out.intervals) {
    if (!merged.empty() && iv.lo <= merged.back().hi + opt.time_tol) {
      merged.back().hi = std::max(merged.back().hi, iv.hi);
    } else {
      merged.push_back(iv);
    }
  }
  out.intervals = std::move(merged);
  return out;
}

// Boundary of the feasible interval around `hint` on the side facing
// `target`, found against the first grid point (or the target) in between.
// nullopt when the hint is infeasible or that neighbour is feasible, since
// the grid walk then finds something at least as close.
std::optional<double> HintBoundary(FeasibilityProbe& probe, double target,
                                   double hint, const ScanGrid& grid,
                                   const PlannerOptions& opt) {
  if (!(hint >= opt.t_min && hint <= opt.t_max) || hint == target || !probe(hint)) {
    return std::nullopt;
  }
  double neighbour;
  if (hint < target) {
    int j = grid.Below(hint) + 1;
    if (j <= grid.m && grid(j) <= hint) ++j;
    neighbour = std::min(j <= grid.m ? grid(j) : opt.t_max, target);
  } else {
    const int j = grid.Below(hint);
    neighbour = std::max(j >= 0 ? grid(j) : opt.t_min, target);
  }
  if (neighbour == hint) return hint;
  // The target itself is known to be infeasible when the search runs.
  if (neighbour != target && probe(neighbour)) return std::nullopt;
  return BisectBoundary(probe, hint, neighbour, opt.time_tol);
}

// Nearest feasible duration to `target` on the same grid ScanFeasibleTimes
// uses, walking outward from the target instead of scanning the whole
// window. Grid points are visited in order of distance; a side stops at its
// first feasible point, whose boundary is then bisected against the
// neighbouring infeasible point (or the target itself). A feasible `hint`
// catches intervals narrower than the grid spacing.
std::optional<double> NearestFeasibleTime(FeasibilityProbe& probe, double target,
                                          const PlannerOptions& opt,
                                          std::optional<double> hint) {
  const ScanGrid grid(opt);
  const int m = grid.m;
  const std::optional<double> hint_cand =
      hint ? HintBoundary(probe, target, *hint, grid, opt) : std::nullopt;

  // Lower side walks i_lo downward, upper side walks i_hi upward.
  int i_lo = grid.Below(target);
  int i_hi = i_lo + 1;
  if (i_hi <= m && grid(i_hi) == target) ++i_hi;
  double prev_lo = target, prev_hi = target;
  std::optional<double> lo_cand, hi_cand;
  bool lo_done = i_lo < 0, hi_done = i_hi > m;
  auto dist = [&](const std::optional<double>& c) {
    return c ? std::abs(*c - target) : std::numeric_limits<double>::infinity();
  };
  auto best = [&]() { return std::min({dist(lo_cand), dist(hi_cand), dist(hint_cand)}); };
  while (!lo_done || !hi_done) {
    // A side can still win only if its boundary, which lies beyond the
    // previous grid point, could be closer than the best candidate.
    if (!lo_done && target - prev_lo > best()) lo_done = true;
    if (!hi_done && prev_hi - target > best()) hi_done = true;
    if (lo_done && hi_done) break;
    const bool take_lo =
        !lo_done && (hi_done || target - grid(i_lo) <= grid(i_hi) - target);
    if (take_lo) {
      const double g = grid(i_lo);
      if (probe(g)) {
        lo_cand = prev_lo > opt.t_max ? g : BisectBoundary(probe, g, prev_lo, opt.time_tol);
        lo_done = true;
      } else {
        prev_lo = g;
        lo_done = --i_lo < 0;
      }
    } else {
      const double g = grid(i_hi);
      if (probe(g)) {
        hi_cand = prev_hi < opt.t_min ? g : BisectBoundary(probe, g, prev_hi, opt.time_tol);
        hi_done = true;
      } else {
        prev_hi = g;
        hi_done = ++i_hi > m;
      }
    }
  }
  // Smallest distance wins; ties go to the shorter duration.
  std::optional<double> out;
  for (const std::optional<double>& c : {lo_cand, hi_cand, hint_cand}) {
    if (!c) continue;
    if (!out || dist(c) < dist(out) || (dist(c) == dist(out) && *c < *out)) out = c;
  }
  return out;
}

}  // namespace

void BoundaryConditions::Validate() const {
  if (!x0.IsFinite() || !xf.IsFinite()) {
    throw std::invalid_argument("boundary conditions: non-finite state");
  }
}

void PlannerOptions::Validate() const {
  if (knots < 16) throw std::invalid_argument("planner: knots must be >= 16");
  if (!(t_min > 0.0) || !(t_max > t_min)) {
    throw std::invalid_argument("planner: need 0 < t_min < t_max");
  }
  if (!(scan_ratio > 0.0) || !(time_tol > 0.0) || max_iterations < 1) {
    throw std::invalid_argument("planner: scan_ratio, time_tol, max_iterations must be > 0");
  }
}

bool FeasibleTimeSet::Contains(double t) const {
  return std::any_of(intervals.begin(), intervals.end(), [t](const TimeInterval& iv) {
    return t >= iv.lo && t <= iv.hi;
  });
}

std::optional<double> FeasibleTimeSet::Closest(double t) const {
  std::optional<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const TimeInterval& iv : intervals) {
    const double cand = std::clamp(t, iv.lo, iv.hi);
    const double dist = std::abs(cand - t);
    // Intervals are sorted, so a strict comparison keeps the smaller one.
    if (dist < best_dist) {
      best_dist = dist;
      best = cand;
    }
  }
  return best;
}

Vec2 CopTrajectory::At(double t) const {
  const int n = static_cast<int>(values.size());
  const int k = std::clamp(static_cast<int>(std::floor(t / knot_period())), 0, n - 1);
  return values[k];
}

MinEnergyResult MinEnergyControl(const BoundaryConditions& bc, double duration,
                                 const PendulumParams& params, int knots) {
  CheckDuration(duration, knots);
  bc.Validate();
  const KnotBasis b(duration, params.omega, knots);
  const AxisPair problems = MakeProblems(bc, b, params);
  MinEnergyResult out;
  if (!FeasibleWith(b, problems)) return out;

  std::vector<double> u[2];
  bool converged = true;
  for (int i = 0; i < 2; ++i) {
    converged &= SolveAxis(b, problems.axis[i], &u[i], 200, &out.iterations,
                           &out.kkt_residual);
  }
  if (!converged) return out;

  out.feasible = true;
  out.cop.duration = duration;
  out.cop.values.resize(knots);
  const double piece = duration / knots;
  for (int k = 0; k < knots; ++k) {
    out.cop.values[k] = Vec2(u[0][k], u[1][k]);
    out.cost += piece * out.cop.values[k].squaredNorm();
  }
  return out;
}

bool IsTimeFeasible(const BoundaryConditions& bc, double duration,
                    const PendulumParams& params, int knots) {
  CheckDuration(duration, knots);
  const KnotBasis b(duration, params.omega, knots);
  return FeasibleWith(b, MakeProblems(bc, b, params));
}

FeasibleTimeSet ComputeFeasibleTimeSet(const BoundaryConditions& bc,
                                       const PendulumParams& params,
                                       const PlannerOptions& options) {
  options.Validate();
  bc.Validate();
  FeasibilityProbe probe(bc, params, options.knots);
  return ScanFeasibleTimes(probe, options);
}

double TargetTime(double sigma, double sigma_dot_target, double path_length) {
  if (!(sigma_dot_target > 0.0)) {
    throw std::invalid_argument("target time: target velocity must be > 0");
  }
  if (sigma > path_length) {
    throw std::invalid_argument("target time: sigma beyond path length");
  }
  return (path_length - sigma) / sigma_dot_target;
}

LipState ReplanSolution::StateAt(double t, const PendulumParams& params) const {
  const int n = static_cast<int>(cop.values.size());
  const double piece = cop.knot_period();
  const int k = std::clamp(static_cast<int>(std::floor(t / piece)), 0, n - 1);
  const double dt = std::clamp(t - k * piece, 0.0, piece);
  return Propagate(states[k], cop.values[k], dt, params);
}

ReplanSolution SolveProblem1(const BoundaryConditions& bc, double t_target,
                             const PendulumParams& params,
                             const PlannerOptions& options,
                             const PathProgress& progress,
                             std::optional<double> hint) {
  const auto started = std::chrono::steady_clock::now();
  if (!(t_target > 0.0) || !std::isfinite(t_target)) {
    throw std::invalid_argument("replanner: target time must be > 0");
  }
  bc.Validate();

  ReplanSolution sol;
  sol.t_target = t_target;
  FeasibilityProbe probe(bc, params, options.knots);
  const bool in_window = t_target >= options.t_min && t_target <= options.t_max;
  if (in_window && probe(t_target)) {
    sol.t_opt = t_target;
    sol.stats.fast_path = true;
  } else {
    const std::optional<double> closest = NearestFeasibleTime(probe, t_target, options, hint);
    if (!closest) {
      throw BalanceUnrecoverableError(
          "replanner: no feasible step duration in the search window");
    }
    sol.t_opt = *closest;
  }
  sol.stats.feasibility_checks = probe.checks();

  MinEnergyResult inner = MinEnergyControl(bc, sol.t_opt, params, options.knots);
  sol.stats.qp_iterations = inner.iterations;
  if (!inner.feasible) {
    std::ostringstream msg;
    msg << "replanner: inner problem failed at T=" << sol.t_opt;
    throw BalanceUnrecoverableError(msg.str());
  }
  sol.cop = std::move(inner.cop);
  sol.cost = inner.cost;
  sol.respected = std::abs(sol.t_opt - t_target) <= options.time_tol;
  if (progress.length > 0.0) {
    sol.sigma_rate = (progress.length - progress.sigma) / sol.t_opt;
  }

  const int n = static_cast<int>(sol.cop.values.size());
  const double piece = sol.cop.knot_period();
  sol.states.resize(n + 1);
  sol.states[0] = bc.x0;
  for (int k = 0; k < n; ++k) {
    sol.states[k + 1] = Propagate(sol.states[k], sol.cop.values[k], piece, params);
  }
  sol.stats.cpu_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sol;
}

}  // namespace exo
