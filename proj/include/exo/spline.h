#ifndef EXO_SPLINE_H_
#define EXO_SPLINE_H_

#include <vector>

namespace exo {

// C2 cubic spline on a uniform grid. End slopes are taken from second-order
// one-sided differences, which keeps the interpolation error O(h^3) at the
// ends instead of the O(h^2) a natural spline would give. Queries outside
// the grid are clamped to the end points.
class UniformCubicSpline {
 public:
  UniformCubicSpline() = default;
  UniformCubicSpline(double x0, double step, std::vector<double> values);

  double operator()(double x) const;
  double Derivative(double x) const;

  double x_begin() const { return x0_; }
  double x_end() const { return x0_ + h_ * static_cast<double>(y_.size() - 1); }
  bool empty() const { return y_.empty(); }

 private:
  // Returns the interval index and the local offset into it.
  int Locate(double x, double* t) const;

  double x0_ = 0.0;
  double h_ = 1.0;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson) on
// a strictly increasing, possibly non-uniform grid. Monotone data gives a
// monotone interpolant, which is what inverting an abscissa table needs.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_;
};

}  // namespace exo

#endif  // EXO_SPLINE_H_
