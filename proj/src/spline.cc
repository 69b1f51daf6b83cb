#include "exo/spline.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace exo {

UniformCubicSpline::UniformCubicSpline(double x0, double step,
                                       std::vector<double> values)
    : x0_(x0), h_(step), y_(std::move(values)) {
  const int n = static_cast<int>(y_.size());
  if (n < 3) throw std::invalid_argument("spline: need at least 3 knots");
  if (!(step > 0.0)) throw std::invalid_argument("spline: step must be > 0");

  const double h = h_;
  const double slope0 = (-3.0 * y_[0] + 4.0 * y_[1] - y_[2]) / (2.0 * h);
  const double slope1 =
      (3.0 * y_[n - 1] - 4.0 * y_[n - 2] + y_[n - 3]) / (2.0 * h);

  // Clamped-spline tridiagonal system for the knot second derivatives,
  // solved with the Thomas algorithm.
  std::vector<double> diag(n), upper(n), rhs(n);
  diag[0] = 2.0;
  upper[0] = 1.0;
  rhs[0] = 6.0 / h * ((y_[1] - y_[0]) / h - slope0);
  for (int i = 1; i < n - 1; ++i) {
    diag[i] = 4.0;
    upper[i] = 1.0;
    rhs[i] = 6.0 / (h * h) * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]);
  }
  diag[n - 1] = 2.0;
  upper[n - 1] = 0.0;
  rhs[n - 1] = 6.0 / h * (slope1 - (y_[n - 1] - y_[n - 2]) / h);

  for (int i = 1; i < n; ++i) {
    const double f = 1.0 / diag[i - 1];
    diag[i] -= f * upper[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  m_.assign(n, 0.0);
  m_[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
  }
}

int UniformCubicSpline::Locate(double x, double* t) const {
  const int last = static_cast<int>(y_.size()) - 2;
  const double pos = std::clamp((x - x0_) / h_, 0.0, static_cast<double>(last + 1));
  int i = std::min(static_cast<int>(pos), last);
  *t = pos - i;
  return i;
}

double UniformCubicSpline::operator()(double x) const {
  double t = 0.0;
  const int i = Locate(x, &t);
  const double a = 1.0 - t;
  const double h2 = h_ * h_ / 6.0;
  return a * y_[i] + t * y_[i + 1] +
         h2 * ((a * a * a - a) * m_[i] + (t * t * t - t) * m_[i + 1]);
}

double UniformCubicSpline::Derivative(double x) const {
  double t = 0.0;
  const int i = Locate(x, &t);
  const double a = 1.0 - t;
  return (y_[i + 1] - y_[i]) / h_ +
         h_ / 6.0 * (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * t * t - 1.0) * m_[i + 1]);
}

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const size_t n = x_.size();
  if (n < 2 || y_.size() != n) {
    throw std::invalid_argument("monotone cubic: need >= 2 matching points");
  }
  std::vector<double> delta(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double dx = x_[i + 1] - x_[i];
    if (!(dx > 0.0)) {
      throw std::invalid_argument("monotone cubic: x must be strictly increasing");
    }
    delta[i] = (y_[i + 1] - y_[i]) / dx;
  }
  d_.assign(n, 0.0);
  d_[0] = delta[0];
  d_[n - 1] = delta[n - 2];
  for (size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) continue;
    // Weighted harmonic mean (Fritsch-Butland), monotone by construction.
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double w0 = 2.0 * h1 + h0;
    const double w1 = h1 + 2.0 * h0;
    d_[i] = (w0 + w1) / (w0 / delta[i - 1] + w1 / delta[i]);
  }
}

double MonotoneCubic::operator()(double x) const {
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const size_t i = static_cast<size_t>(
      std::upper_bound(x_.begin(), x_.end(), x) - x_.begin() - 1);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] +
         (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * d_[i + 1];
}

}  // namespace exo
