#ifndef EXO_SWING_PATH_H_
#define EXO_SWING_PATH_H_

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "exo/gait.h"
#include "exo/spline.h"

namespace exo {

class DegeneratePathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SwingPathOptions {
  int knots = 1000;
  double min_speed = 1e-4;  // joint-space speed floor for invertibility
};

struct PathPoint {
  Eigen::VectorXd position;
  Eigen::VectorXd tangent;  // unit norm
  bool clamped = false;     // sigma was outside [0, length]
};

// Joint-space swing trajectory reparametrized by its arc length sigma.
// P(sigma) is a cubic spline through knots uniformly spaced in sigma; the
// tangent is the spline derivative renormalized to unit length.
class SwingPath {
 public:
  // `times` uniformly spaced, one joint vector per time.
  static SwingPath Build(const std::vector<double>& times,
                         const std::vector<Eigen::VectorXd>& positions,
                         const SwingPathOptions& options = {});

  double length() const { return length_; }
  int dims() const { return static_cast<int>(joints_.size()); }
  double duration() const { return t_end_ - t_begin_; }

  PathPoint Eval(double sigma) const;
  // Abscissa s(t) with t relative to the start of the trajectory.
  double AbscissaAt(double t) const;
  // Inverse map s^-1(sigma), relative time.
  double TimeAt(double sigma) const;
  // Joint-space speed |dT_sw/dt| at relative time t.
  double SpeedAt(double t) const;

 private:
  double length_ = 0.0;
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
  std::vector<UniformCubicSpline> joints_;  // P_j(sigma)
  MonotoneCubic abscissa_;                  // t -> s
  MonotoneCubic inverse_;                   // s -> t
  MonotoneCubic speed_;                     // t -> |qdot|
};

SwingPath BuildSwingPath(const NominalGait& gait, int step_index,
                         const SwingPathOptions& options = {});

}  // namespace exo

#endif  // EXO_SWING_PATH_H_
