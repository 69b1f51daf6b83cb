#include "exo/stabilizer.h"

#include <stdexcept>

namespace exo {

void DcmGains::Validate() const {
  if (!(kp.minCoeff() > 0.0) || !(ki.minCoeff() > 0.0) || !(kd.minCoeff() > 0.0)) {
    throw std::invalid_argument("dcm gains: kp, ki, kd must be positive");
  }
}

Vec2 ClampToPolygon(const Vec2& u, const SupportPolygon& polygon, bool* saturated) {
  return polygon.Clamp(u, saturated);
}

StabilizerOutput DcmControl(const LipState& measured, const LipState& reference,
                            const Vec2& reference_dcm_rate,
                            const Vec2& reference_cop, const Vec2& applied_cop,
                            const SupportPolygon& polygon,
                            const StabilizerConfig& config,
                            const PendulumParams& params, StabilizerState* state) {
  const double w = params.omega;
  const DcmGains& g = config.gains;
  const Vec2 xi = ToDcm(measured, params).dcm;
  const Vec2 xi_ref = ToDcm(reference, params).dcm;
  const Vec2 err = xi_ref - xi;
  const Vec2 xi_rate = w * (xi - applied_cop);

  StabilizerOutput out;
  out.desired = reference_cop -
                (Vec2::Ones() + g.kp / w).cwiseProduct(err) -
                (g.ki / w).cwiseProduct(state->integral) +
                g.kd.cwiseProduct(reference_dcm_rate - xi_rate);
  out.command = ClampToPolygon(out.desired, polygon, &out.saturated);

  // Conditional integration: hold the integral on a saturated axis when the
  // new error would drive the output further past the face.
  Vec2 next = state->integral;
  for (int i = 0; i < 2; ++i) {
    const double push = -(g.ki[i] / w) * err[i];
    const bool clipped = out.desired[i] != out.command[i];
    const bool worsens = clipped && ((out.desired[i] > out.command[i]) == (push > 0.0));
    if (!worsens) next[i] += config.period * err[i];
  }
  const double norm = next.norm();
  if (norm > config.windup_bound) next *= config.windup_bound / norm;
  state->integral = next;
  state->saturated = out.saturated;
  return out;
}

}  // namespace exo
