#include "exo/virtual_guides.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exo {

SwingGains SwingGains::Uniform(int dims, double kp, double kd) {
  SwingGains g{Eigen::VectorXd::Constant(dims, kp),
               Eigen::VectorXd::Constant(dims, kd)};
  g.Validate(dims);
  return g;
}

void SwingGains::Validate(int dims) const {
  if (kp.size() != dims || kd.size() != dims) {
    throw std::invalid_argument("swing gains: dimension mismatch");
  }
  if (!(kp.minCoeff() > 0.0) || !(kd.minCoeff() > 0.0)) {
    throw std::invalid_argument("swing gains: Kp and Kd must be positive definite");
  }
}

VelocityLimits VelocityLimits::FromNominal(double path_length, double duration,
                                           double min_fraction,
                                           double max_fraction) {
  if (!(path_length > 0.0) || !(duration > 0.0) || !(min_fraction > 0.0) ||
      !(max_fraction > min_fraction)) {
    throw std::invalid_argument("velocity limits: need 0 < min < max");
  }
  const double mean = path_length / duration;
  return {min_fraction * mean, max_fraction * mean};
}

Eigen::VectorXd SwingTorque(const SwingPath& path, double sigma,
                            double sigma_dot, const SwingJointState& state,
                            const SwingGains& gains) {
  const PathPoint p = path.Eval(sigma);
  return gains.kp.cwiseProduct(p.position - state.q) +
         gains.kd.cwiseProduct(p.tangent * sigma_dot - state.qd);
}

TargetVelocity EstimateTargetVelocity(const SwingPath& path, double sigma,
                                      const SwingJointState& state,
                                      const SwingGains& gains,
                                      const VelocityLimits& limits) {
  const PathPoint p = path.Eval(sigma);
  const Eigen::VectorXd& t = p.tangent;
  const double num = t.dot(gains.kp.cwiseProduct(state.q - p.position) +
                           gains.kd.cwiseProduct(state.qd));
  const double den = t.dot(gains.kd.cwiseProduct(t));
  TargetVelocity out;
  out.raw = num / den;
  out.saturated = std::clamp(out.raw, limits.min, limits.max);
  return out;
}

double TargetVelocityFilter::Update(double input, double dt) {
  if (!primed_ || time_constant_ <= 0.0) {
    value_ = input;
    primed_ = true;
    return value_;
  }
  const double a = dt / (time_constant_ + dt);
  value_ += a * (input - value_);
  return value_;
}

}  // namespace exo
