#include "exo/lip.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exo {

PendulumParams PendulumParams::Make(double gravity, double com_height) {
  if (!(gravity > 0.0) || !(com_height > 0.0) || !std::isfinite(gravity) ||
      !std::isfinite(com_height)) {
    throw std::invalid_argument("pendulum: gravity and com_height must be > 0");
  }
  return {gravity, com_height, std::sqrt(gravity / com_height)};
}

bool LipState::IsFinite() const {
  return com.allFinite() && com_vel.allFinite();
}

SupportPolygon::SupportPolygon()
    : center_(Vec2::Zero()), half_extents_(0.10, 0.05) {}

SupportPolygon::SupportPolygon(const Vec2& center, const Vec2& half_extents)
    : center_(center), half_extents_(half_extents) {
  if (!center.allFinite() || !half_extents.allFinite() ||
      !(half_extents.x() > 0.0) || !(half_extents.y() > 0.0)) {
    throw std::invalid_argument(
        "support polygon: half extents must be finite and > 0");
  }
}

bool SupportPolygon::Contains(const Vec2& u) const {
  const Vec2 lo = lower();
  const Vec2 hi = upper();
  return u.x() >= lo.x() && u.x() <= hi.x() && u.y() >= lo.y() &&
         u.y() <= hi.y();
}

Vec2 SupportPolygon::Clamp(const Vec2& u, bool* saturated) const {
  const Vec2 lo = lower();
  const Vec2 hi = upper();
  const Vec2 out(std::clamp(u.x(), lo.x(), hi.x()),
                 std::clamp(u.y(), lo.y(), hi.y()));
  if (saturated != nullptr) *saturated = (out.x() != u.x() || out.y() != u.y());
  return out;
}

double SupportPolygon::ExitDistance(const Vec2& u) const {
  const Vec2 below = lower() - u;
  const Vec2 above = u - upper();
  return std::max({0.0, below.maxCoeff(), above.maxCoeff()});
}

SupportPolygon SupportPolygon::Shrunk(double factor) const {
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw std::invalid_argument("support polygon: shrink factor not in (0,1]");
  }
  return SupportPolygon(center_, half_extents_ * factor);
}

SupportPolygon SupportPolygon::Mirrored() const {
  return SupportPolygon(Vec2(center_.x(), -center_.y()), half_extents_);
}

SupportPolygon SupportPolygon::BoundingBox(const SupportPolygon& a,
                                           const SupportPolygon& b) {
  const Vec2 lo = a.lower().cwiseMin(b.lower());
  const Vec2 hi = a.upper().cwiseMax(b.upper());
  return SupportPolygon(0.5 * (lo + hi), 0.5 * (hi - lo));
}

LipState Propagate(const LipState& state, const Vec2& cop, double dt,
                   const PendulumParams& params) {
  if (!state.IsFinite() || !cop.allFinite() || !std::isfinite(dt)) {
    throw std::invalid_argument("propagate: non-finite input");
  }
  if (dt < 0.0) throw std::invalid_argument("propagate: dt must be >= 0");
  const double w = params.omega;
  const double ch = std::cosh(w * dt);
  const double sh = std::sinh(w * dt);
  const Vec2 offset = state.com - cop;
  LipState out;
  out.com = cop + offset * ch + state.com_vel * (sh / w);
  out.com_vel = offset * (w * sh) + state.com_vel * ch;
  return out;
}

DcmPair ToDcm(const LipState& state, const PendulumParams& params) {
  const Vec2 v = state.com_vel / params.omega;
  return {state.com + v, state.com - v};
}

LipState FromDcm(const DcmPair& pair, const PendulumParams& params) {
  return {0.5 * (pair.dcm + pair.cdm),
          0.5 * params.omega * (pair.dcm - pair.cdm)};
}

Vec2 CopFromAccel(const Vec2& com, const Vec2& com_acc,
                  const PendulumParams& params) {
  return com - com_acc / (params.omega * params.omega);
}

LipState MirrorState(const LipState& state) {
  return {Vec2(state.com.x(), -state.com.y()),
          Vec2(state.com_vel.x(), -state.com_vel.y())};
}

}  // namespace exo
