#ifndef EXO_LIP_H_
#define EXO_LIP_H_

#include <Eigen/Core>

namespace exo {

using Vec2 = Eigen::Vector2d;

// Constant-height pendulum parameters. `omega` is always sqrt(gravity /
// com_height); construct through Make() so the three never disagree.
struct PendulumParams {
  double gravity = 9.81;
  double com_height = 0.9;
  double omega = 0.0;

  static PendulumParams Make(double gravity = 9.81, double com_height = 0.9);
};

// Planar CoM position and velocity of the reduced model.
struct LipState {
  Vec2 com = Vec2::Zero();
  Vec2 com_vel = Vec2::Zero();

  bool IsFinite() const;
};

// Divergent (xi = c + cdot/omega) and convergent (zeta = c - cdot/omega)
// components. The pair diagonalizes the LIP: under a constant CoP u,
// xi - u grows as e^{omega t} and zeta - u decays as e^{-omega t}.
struct DcmPair {
  Vec2 dcm = Vec2::Zero();
  Vec2 cdm = Vec2::Zero();
};

// Axis-aligned rectangle the CoP is confined to. Closed set.
class SupportPolygon {
 public:
  SupportPolygon();
  SupportPolygon(const Vec2& center, const Vec2& half_extents);

  const Vec2& center() const { return center_; }
  const Vec2& half_extents() const { return half_extents_; }
  Vec2 lower() const { return center_ - half_extents_; }
  Vec2 upper() const { return center_ + half_extents_; }

  bool Contains(const Vec2& u) const;
  // Componentwise projection; `saturated` is set when any axis was clipped.
  Vec2 Clamp(const Vec2& u, bool* saturated = nullptr) const;
  // Largest componentwise distance outside the rectangle, 0 when inside.
  double ExitDistance(const Vec2& u) const;
  // Same center, half extents scaled by `factor` in (0, 1].
  SupportPolygon Shrunk(double factor) const;
  // Reflection about the sagittal (x) axis.
  SupportPolygon Mirrored() const;
  // Smallest rectangle containing both.
  static SupportPolygon BoundingBox(const SupportPolygon& a,
                                    const SupportPolygon& b);

 private:
  Vec2 center_;
  Vec2 half_extents_;
};

// Exact solution of cddot = omega^2 (c - u) for a CoP held constant over dt.
LipState Propagate(const LipState& state, const Vec2& cop, double dt,
                   const PendulumParams& params);

DcmPair ToDcm(const LipState& state, const PendulumParams& params);
LipState FromDcm(const DcmPair& pair, const PendulumParams& params);

// u = c - cddot / omega^2.
Vec2 CopFromAccel(const Vec2& com, const Vec2& com_acc,
                  const PendulumParams& params);

LipState MirrorState(const LipState& state);

}  // namespace exo

#endif  // EXO_LIP_H_
