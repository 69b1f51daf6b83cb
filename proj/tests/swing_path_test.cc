#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "exo/gait.h"
#include "exo/swing_path.h"

using exo::SwingPath;

namespace {

SwingPath Sampled(double t_end, int n, Eigen::VectorXd (*f)(double)) {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> q;
  for (int i = 0; i <= n; ++i) {
    t.push_back(t_end * i / n);
    q.push_back(f(t.back()));
  }
  return SwingPath::Build(t, q);
}

Eigen::VectorXd Ramp(double t) { return Eigen::VectorXd::Constant(1, 0.7 * t); }

Eigen::VectorXd Arc(double t) {
  Eigen::VectorXd q(2);
  q << std::cos(t), std::sin(t);
  return q;
}

}  // namespace

TEST_CASE("linear ramp is its own arc length") {
  const SwingPath p = Sampled(1.0, 500, Ramp);
  CHECK(p.length() == doctest::Approx(0.7).epsilon(1e-12));
  for (double s = 0.0; s <= 0.7; s += 0.01) {
    const exo::PathPoint pt = p.Eval(s);
    CHECK(pt.position[0] == doctest::Approx(s).epsilon(1e-9));
    CHECK(pt.tangent[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(pt.clamped);
  }
  CHECK(p.TimeAt(0.35) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(p.AbscissaAt(0.25) == doctest::Approx(0.175).epsilon(1e-9));
}

TEST_CASE("unit circle arc") {
  const SwingPath p = Sampled(std::numbers::pi / 2, 2000, Arc);
  CHECK(p.length() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-6));

  SUBCASE("end points and midpoint") {
    const exo::PathPoint a = p.Eval(0.0), b = p.Eval(p.length());
    CHECK(a.position[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.position[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(b.position[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(b.position[1] == doctest::Approx(1.0).epsilon(1e-9));
    const exo::PathPoint m = p.Eval(p.length() / 2);
    CHECK(m.position[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(m.position[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  }
  SUBCASE("tangent is unit and along the circle") {
    double worst = 0.0, along = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double s = p.length() * i / 1000;
      const exo::PathPoint pt = p.Eval(s);
      worst = std::max(worst, std::abs(pt.tangent.norm() - 1.0));
      Eigen::Vector2d expect(-std::sin(s), std::cos(s));
      along = std::max(along, (pt.tangent - expect).norm());
    }
    CHECK(worst < 1e-12);
    CHECK(along < 1e-4);
  }
  SUBCASE("out-of-range abscissa is clamped and flagged") {
    const exo::PathPoint pt = p.Eval(p.length() + 0.1);
    CHECK(pt.clamped);
    CHECK(pt.position[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.Eval(-0.1).clamped);
  }
}

TEST_CASE("stalled trajectory is rejected") {
  std::vector<double> t{0.0, 0.1, 0.2, 0.3};
  std::vector<Eigen::VectorXd> q(4, Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(SwingPath::Build(t, q), exo::DegeneratePathError);
}

TEST_CASE("synthetic gait swing path") {
  const exo::NominalGait g = exo::GenerateSyntheticGait(
      {}, exo::PendulumParams::Make(), exo::SupportPolygon({0, 0}, {0.1, 0.05}));
  const SwingPath p = exo::BuildSwingPath(g, 0);
  CHECK(p.dims() == 6);
  CHECK(p.duration() == doctest::Approx(0.72).epsilon(1e-9));
  CHECK(p.length() > 0.0);

  std::vector<double> times;
  std::vector<Eigen::VectorXd> q;
  g.SwingTrajectory(0, &times, &q);
  CHECK((p.Eval(0.0).position - q.front()).norm() < 1e-9);
  CHECK((p.Eval(p.length()).position - q.back()).norm() < 1e-9);

  double worst = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    worst = std::max(worst, std::abs(p.Eval(p.length() * i / 10000).tangent.norm() - 1.0));
  }
  CHECK(worst < 1e-4);

  // s is increasing and inverted by TimeAt.
  double prev = -1.0;
  for (double t = 0.0; t <= p.duration(); t += 0.01) {
    const double s = p.AbscissaAt(t);
    CHECK(s > prev);
    CHECK(p.TimeAt(s) == doctest::Approx(t).epsilon(1e-6));
    prev = s;
  }
}
