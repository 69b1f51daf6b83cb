#ifndef EXO_VIRTUAL_GUIDES_H_
#define EXO_VIRTUAL_GUIDES_H_

#include <Eigen/Core>

#include "exo/swing_path.h"

namespace exo {

// Diagonal PD gains of the swing-leg guide.
struct SwingGains {
  Eigen::VectorXd kp;
  Eigen::VectorXd kd;

  static SwingGains Uniform(int dims, double kp, double kd);
  // Throws std::invalid_argument unless every diagonal entry is > 0.
  void Validate(int dims) const;
};

struct SwingJointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
};

// Saturation band for the estimated path speed; min must be > 0.
struct VelocityLimits {
  double min = 0.0;
  double max = 0.0;

  // [min_fraction, max_fraction] of the mean nominal path speed.
  static VelocityLimits FromNominal(double path_length, double duration,
                                    double min_fraction = 0.1,
                                    double max_fraction = 2.0);
};

struct TargetVelocity {
  double raw = 0.0;
  double saturated = 0.0;
};

// tau = Kp (P(sigma) - q) + Kd (T(sigma) sigma_dot - qdot).
Eigen::VectorXd SwingTorque(const SwingPath& path, double sigma,
                            double sigma_dot, const SwingJointState& state,
                            const SwingGains& gains);

// Path speed for which the guide torque has no component along the
// tangent: T'[Kp (q - P) + Kd qdot] / (T' Kd T). The raw value is returned
// alongside its saturation to `limits`.
TargetVelocity EstimateTargetVelocity(const SwingPath& path, double sigma,
                                      const SwingJointState& state,
                                      const SwingGains& gains,
                                      const VelocityLimits& limits);

// Optional first-order low-pass on the estimated target velocity. A time
// constant of 0 passes the input through.
class TargetVelocityFilter {
 public:
  explicit TargetVelocityFilter(double time_constant = 0.0)
      : time_constant_(time_constant) {}

  double Update(double input, double dt);
  void Reset() { primed_ = false; }

 private:
  double time_constant_;
  double value_ = 0.0;
  bool primed_ = false;
};

}  // namespace exo

#endif  // EXO_VIRTUAL_GUIDES_H_
