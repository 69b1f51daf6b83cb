#include "exo/swing_path.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace exo {

SwingPath SwingPath::Build(const std::vector<double>& times,
                           const std::vector<Eigen::VectorXd>& positions,
                           const SwingPathOptions& options) {
  const std::size_t n = times.size();
  if (n < 3 || positions.size() != n) {
    throw std::invalid_argument("swing path: need >= 3 matching samples");
  }
  if (options.knots < 4) throw std::invalid_argument("swing path: knots < 4");
  const int dims = static_cast<int>(positions[0].size());
  const double h = times[1] - times[0];

  // Joint velocities by finite differences, second order everywhere.
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd v;
    if (i == 0) {
      v = (-3.0 * positions[0] + 4.0 * positions[1] - positions[2]) / (2.0 * h);
    } else if (i == n - 1) {
      v = (3.0 * positions[n - 1] - 4.0 * positions[n - 2] + positions[n - 3]) /
          (2.0 * h);
    } else {
      v = (positions[i + 1] - positions[i - 1]) / (2.0 * h);
    }
    speed[i] = v.norm();
    if (!(speed[i] > options.min_speed)) {
      std::ostringstream msg;
      msg << "swing path: joint speed " << speed[i] << " at t=" << times[i]
          << " is below " << options.min_speed << "; abscissa not invertible";
      throw DegeneratePathError(msg.str());
    }
  }

  // Trapezoidal quadrature of the speed.
  std::vector<double> rel(n), s(n);
  s[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) rel[i] = times[i] - times[0];
  for (std::size_t i = 1; i < n; ++i) {
    s[i] = s[i - 1] + 0.5 * (speed[i] + speed[i - 1]) * (rel[i] - rel[i - 1]);
  }

  SwingPath path;
  path.length_ = s.back();
  path.t_begin_ = times.front();
  path.t_end_ = times.back();
  path.abscissa_ = MonotoneCubic(rel, s);
  path.inverse_ = MonotoneCubic(s, rel);
  path.speed_ = MonotoneCubic(rel, speed);

  // Joint trajectories in time, then resampled on a uniform sigma grid.
  std::vector<UniformCubicSpline> in_time;
  for (int j = 0; j < dims; ++j) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = positions[i][j];
    in_time.emplace_back(0.0, h, std::move(col));
  }
  const int knots = options.knots;
  const double step = path.length_ / (knots - 1);
  std::vector<std::vector<double>> resampled(dims, std::vector<double>(knots));
  for (int k = 0; k < knots; ++k) {
    const double t = path.inverse_(k * step);
    for (int j = 0; j < dims; ++j) resampled[j][k] = in_time[j](t);
  }
  for (int j = 0; j < dims; ++j) {
    path.joints_.emplace_back(0.0, step, std::move(resampled[j]));
  }
  return path;
}

PathPoint SwingPath::Eval(double sigma) const {
  PathPoint p;
  p.clamped = sigma < 0.0 || sigma > length_;
  const double s = std::clamp(sigma, 0.0, length_);
  const int dims = this->dims();
  p.position.resize(dims);
  p.tangent.resize(dims);
  for (int j = 0; j < dims; ++j) {
    p.position[j] = joints_[j](s);
    p.tangent[j] = joints_[j].Derivative(s);
  }
  p.tangent.normalize();
  return p;
}

double SwingPath::AbscissaAt(double t) const { return abscissa_(t); }

double SwingPath::TimeAt(double sigma) const { return inverse_(sigma); }

double SwingPath::SpeedAt(double t) const { return speed_(t); }

SwingPath BuildSwingPath(const NominalGait& gait, int step_index,
                         const SwingPathOptions& options) {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> positions;
  gait.SwingTrajectory(step_index, &times, &positions);
  return SwingPath::Build(times, positions, options);
}

}  // namespace exo
