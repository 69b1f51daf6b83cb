#ifndef EXO_TIME_RESCALE_H_
#define EXO_TIME_RESCALE_H_

#include <vector>

#include "exo/gait.h"
#include "exo/lip.h"
#include "exo/swing_path.h"

namespace exo {

// Reference produced by replaying the nominal CoM channel along a patient
// schedule. `dcm_rate` is the time derivative of the reference DCM.
struct TrackingReference {
  LipState state;
  Vec2 cop = Vec2::Zero();
  Vec2 dcm_rate = Vec2::Zero();
  bool clamped = false;  // the schedule ran past the end of the path
};

// Maps the abscissa of one single-support step back to the gait's CoM
// channel: c*(sigma) = c(t_ss + s^-1(sigma)). No constraint of any kind is
// enforced on the result.
class TimeRescaler {
 public:
  TimeRescaler(const NominalGait& gait, int step_index, const SwingPath& path);

  double length() const { return length_; }
  Vec2 ComAtAbscissa(double sigma, bool* clamped = nullptr) const;

  // Reference at abscissa `sigma` travelled at `sigma_dot`. Velocity and
  // acceleration come from central differences over +/- `dt` of schedule
  // time; the CoP follows from the pendulum equation.
  TrackingReference Eval(double sigma, double sigma_dot, double dt,
                         const PendulumParams& params) const;

 private:
  const NominalGait* gait_;
  const SwingPath* path_;
  double t_begin_;
  double length_;
};

struct RescaledTrajectory {
  std::vector<double> sigma;
  std::vector<TrackingReference> reference;
  bool clamped = false;
};

// Batch form: sigma*(t) by trapezoidal integration of `sigma_dot` sampled
// every `dt`, then the reference at every sample.
RescaledTrajectory TimeRescale(const TimeRescaler& rescaler,
                               const std::vector<double>& sigma_dot, double dt,
                               const PendulumParams& params);

}  // namespace exo

#endif  // EXO_TIME_RESCALE_H_
