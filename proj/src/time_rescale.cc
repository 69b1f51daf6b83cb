#include "exo/time_rescale.h"

#include <algorithm>
#include <stdexcept>

namespace exo {

TimeRescaler::TimeRescaler(const NominalGait& gait, int step_index,
                           const SwingPath& path)
    : gait_(&gait),
      path_(&path),
      t_begin_(gait.single_support(step_index).start),
      length_(path.length()) {}

Vec2 TimeRescaler::ComAtAbscissa(double sigma, bool* clamped) const {
  if (clamped) *clamped = sigma > length_ || sigma < 0.0;
  const double s = std::clamp(sigma, 0.0, length_);
  return gait_->ComAt(t_begin_ + path_->TimeAt(s));
}

TrackingReference TimeRescaler::Eval(double sigma, double sigma_dot, double dt,
                                     const PendulumParams& params) const {
  if (!(dt > 0.0)) throw std::invalid_argument("time rescale: dt must be > 0");
  TrackingReference ref;
  const double ds = sigma_dot * dt;
  const Vec2 c = ComAtAbscissa(sigma, &ref.clamped);
  auto at = [&](int k) { return ComAtAbscissa(sigma + k * ds); };
  Vec2 vel, acc;
  if (sigma + ds > length_) {
    // One-sided, second order, so the stencil stays on the path.
    const Vec2 b1 = at(-1), b2 = at(-2), b3 = at(-3);
    vel = (3.0 * c - 4.0 * b1 + b2) / (2.0 * dt);
    acc = (2.0 * c - 5.0 * b1 + 4.0 * b2 - b3) / (dt * dt);
  } else if (sigma - ds < 0.0) {
    const Vec2 f1 = at(1), f2 = at(2), f3 = at(3);
    vel = (-3.0 * c + 4.0 * f1 - f2) / (2.0 * dt);
    acc = (2.0 * c - 5.0 * f1 + 4.0 * f2 - f3) / (dt * dt);
  } else {
    const Vec2 back = at(-1), ahead = at(1);
    vel = (ahead - back) / (2.0 * dt);
    acc = (ahead - 2.0 * c + back) / (dt * dt);
  }
  ref.state.com = c;
  ref.state.com_vel = vel;
  ref.cop = CopFromAccel(c, acc, params);
  ref.dcm_rate = ref.state.com_vel + acc / params.omega;
  return ref;
}

RescaledTrajectory TimeRescale(const TimeRescaler& rescaler,
                               const std::vector<double>& sigma_dot, double dt,
                               const PendulumParams& params) {
  RescaledTrajectory out;
  double sigma = 0.0;
  for (std::size_t i = 0; i < sigma_dot.size(); ++i) {
    if (i > 0) sigma += 0.5 * (sigma_dot[i] + sigma_dot[i - 1]) * dt;
    out.sigma.push_back(std::min(sigma, rescaler.length()));
    out.reference.push_back(rescaler.Eval(sigma, sigma_dot[i], dt, params));
    out.clamped = out.clamped || out.reference.back().clamped;
  }
  return out;
}

}  // namespace exo
