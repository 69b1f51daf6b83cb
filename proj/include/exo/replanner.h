#ifndef EXO_REPLANNER_H_
#define EXO_REPLANNER_H_

#include <optional>
#include <stdexcept>
#include <vector>

#include "exo/lip.h"

namespace exo {

struct BoundaryConditions {
  LipState x0;
  LipState xf;
  SupportPolygon polygon;

  // Throws std::invalid_argument on non-finite states.
  void Validate() const;
};

struct PlannerOptions {
  int knots = 64;           // piecewise-constant CoP pieces per axis
  double t_min = 0.05;      // s, search window
  double t_max = 3.0;       // s
  double scan_ratio = 0.02; // relative spacing of the coarse scan grid
  double time_tol = 1e-4;   // s, interval boundary tolerance
  int max_iterations = 200; // dual Newton iterations per axis

  void Validate() const;
};

struct TimeInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// Sorted, disjoint closed intervals of feasible step durations.
struct FeasibleTimeSet {
  std::vector<TimeInterval> intervals;

  bool empty() const { return intervals.empty(); }
  bool Contains(double t) const;
  // Point of the set closest to `t`; equidistant ties go to the smaller
  // duration. nullopt when empty.
  std::optional<double> Closest(double t) const;
};

// CoP held constant on `values.size()` equal pieces of [0, duration].
struct CopTrajectory {
  double duration = 0.0;
  std::vector<Vec2> values;

  double knot_period() const { return duration / static_cast<double>(values.size()); }
  Vec2 At(double t) const;
};

struct MinEnergyResult {
  bool feasible = false;
  CopTrajectory cop;
  double cost = 0.0;          // integral of |u|^2 over [0, T]
  double kkt_residual = 0.0;  // scaled equality-constraint residual
  int iterations = 0;
};

// Inner level: minimum integral of |u|^2 over piecewise-constant CoPs that
// stay in the polygon and drive x0 to xf in exactly `duration`. Each axis is
// solved separately. Infeasibility is reported, not thrown.
MinEnergyResult MinEnergyControl(const BoundaryConditions& bc, double duration,
                                 const PendulumParams& params, int knots);

// Whether MinEnergyControl would find a feasible control. Much cheaper.
bool IsTimeFeasible(const BoundaryConditions& bc, double duration,
                    const PendulumParams& params, int knots);

// Coarse scan over [t_min, t_max] on a geometric grid, followed by
// bisection of every boundary.
FeasibleTimeSet ComputeFeasibleTimeSet(const BoundaryConditions& bc,
                                       const PendulumParams& params,
                                       const PlannerOptions& options);

// Remaining time if the patient kept the current target speed to the end
// of the path. Throws std::invalid_argument if sigma_dot_target <= 0.
double TargetTime(double sigma, double sigma_dot_target, double path_length);

class BalanceUnrecoverableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverStats {
  int feasibility_checks = 0;
  int qp_iterations = 0;
  bool fast_path = false;  // target time was feasible as is
  double cpu_seconds = 0.0;
};

// Position along the swing path, used to turn the chosen duration into a
// schedule rate. A zero length leaves sigma_rate at 0.
struct PathProgress {
  double sigma = 0.0;
  double length = 0.0;
};

struct ReplanSolution {
  double t_opt = 0.0;
  double t_target = 0.0;
  CopTrajectory cop;
  std::vector<LipState> states;  // knot states, states.front() == x0
  double sigma_rate = 0.0;
  bool respected = false;
  double cost = 0.0;
  SolverStats stats;

  // Exact state at time t in [0, t_opt] along the planned trajectory.
  LipState StateAt(double t, const PendulumParams& params) const;
};

// Outer level: the feasible duration closest to `t_target` (searched outward
// on the same grid as ComputeFeasibleTimeSet), with the minimum-energy CoP
// for it. `hint`, typically the previous tick's duration minus the tick,
// lets the search keep hold of intervals narrower than the grid spacing.
// Throws BalanceUnrecoverableError when no duration in the search window is
// feasible.
ReplanSolution SolveProblem1(const BoundaryConditions& bc, double t_target,
                             const PendulumParams& params,
                             const PlannerOptions& options,
                             const PathProgress& progress = {},
                             std::optional<double> hint = std::nullopt);

}  // namespace exo

#endif  // EXO_REPLANNER_H_
