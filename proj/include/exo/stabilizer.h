#ifndef EXO_STABILIZER_H_
#define EXO_STABILIZER_H_

#include "exo/lip.h"

namespace exo {

// Diagonal DCM feedback gains, dimensionless in the omega-normalized law.
struct DcmGains {
  Vec2 kp = Vec2::Constant(2.0);
  Vec2 ki = Vec2::Constant(0.5);
  Vec2 kd = Vec2::Constant(0.2);

  // Throws std::invalid_argument unless every entry is > 0.
  void Validate() const;
};

struct StabilizerConfig {
  DcmGains gains;
  double period = 1e-3;        // s, integration step of the integral term
  double windup_bound = 0.05;  // m s, norm bound on the integral
};

struct StabilizerState {
  Vec2 integral = Vec2::Zero();  // running integral of (xi* - xi)
  bool saturated = false;        // last output was clipped to the polygon
};

struct StabilizerOutput {
  Vec2 desired = Vec2::Zero();  // u^d before clamping
  Vec2 command = Vec2::Zero();  // clamped to the polygon
  bool saturated = false;
};

// Commanded CoP from the DCM tracking law
//   u^d = u* - (1 + kp/w) e - (ki/w) int(e) + kd (xi*' - xi'),  e = xi* - xi,
// with xi' = w (xi - u_prev) for the CoP applied on the previous tick. The
// integral advances by one explicit Euler step, except while the clamped
// output is saturated and the error would push it further into the bound.
StabilizerOutput DcmControl(const LipState& measured, const LipState& reference,
                            const Vec2& reference_dcm_rate,
                            const Vec2& reference_cop, const Vec2& applied_cop,
                            const SupportPolygon& polygon,
                            const StabilizerConfig& config,
                            const PendulumParams& params, StabilizerState* state);

// Componentwise projection onto the rectangle.
Vec2 ClampToPolygon(const Vec2& u, const SupportPolygon& polygon,
                    bool* saturated = nullptr);

}  // namespace exo

#endif  // EXO_STABILIZER_H_
