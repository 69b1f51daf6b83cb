#include <doctest.h>

#include <random>

#include "exo/gait.h"
#include "exo/swing_path.h"
#include "exo/virtual_guides.h"

using exo::SwingGains;
using exo::SwingJointState;
using exo::SwingPath;
using Eigen::VectorXd;

namespace {

const SwingPath& GaitPath() {
  static const SwingPath path = exo::BuildSwingPath(
      exo::GenerateSyntheticGait({}, exo::PendulumParams::Make(),
                                 exo::SupportPolygon({0, 0}, {0.1, 0.05})),
      0);
  return path;
}

SwingGains Anisotropic() {
  SwingGains g;
  g.kp.resize(6);
  g.kd.resize(6);
  g.kp << 400, 250, 800, 300, 120, 500;
  g.kd << 40, 20, 60, 35, 10, 45;
  return g;
}

const exo::VelocityLimits kWide{1e-3, 1e3};

}  // namespace

TEST_CASE("swing torque on the path") {
  const SwingPath& p = GaitPath();
  const SwingGains g = SwingGains::Uniform(6, 400.0, 40.0);
  const double sigma = 0.4 * p.length();
  const exo::PathPoint pt = p.Eval(sigma);

  SUBCASE("perfect tracking needs no torque") {
    const VectorXd tau = exo::SwingTorque(p, sigma, 1.7, {pt.position, 1.7 * pt.tangent}, g);
    CHECK(tau.norm() < 1e-12);
  }
  SUBCASE("pure velocity error") {
    const VectorXd tau = exo::SwingTorque(p, sigma, 1.0, {pt.position, VectorXd::Zero(6)}, g);
    CHECK((tau - 40.0 * pt.tangent).norm() < 1e-12);
  }
  SUBCASE("matches an independent evaluation") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.1);
    const SwingGains a = Anisotropic();
    for (int i = 0; i < 100; ++i) {
      SwingJointState s{pt.position, VectorXd::Zero(6)};
      for (int j = 0; j < 6; ++j) {
        s.q[j] += n(rng);
        s.qd[j] = 10 * n(rng);
      }
      const double sd = 1.0 + n(rng);
      const VectorXd tau = exo::SwingTorque(p, sigma, sd, s, a);
      VectorXd expect(6);
      for (int j = 0; j < 6; ++j) {
        expect[j] = a.kp[j] * (pt.position[j] - s.q[j]) + a.kd[j] * (pt.tangent[j] * sd - s.qd[j]);
      }
      CHECK((tau - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("target velocity") {
  const SwingPath& p = GaitPath();
  const SwingGains g = SwingGains::Uniform(6, 400.0, 40.0);
  const double sigma = 0.6 * p.length();
  const exo::PathPoint pt = p.Eval(sigma);
  const exo::VelocityLimits lim = exo::VelocityLimits::FromNominal(p.length(), 0.72);

  SUBCASE("moving along the path at v") {
    const exo::TargetVelocity v =
        exo::EstimateTargetVelocity(p, sigma, {pt.position, 0.8 * pt.tangent}, g, kWide);
    CHECK(v.raw == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("stationary user saturates to the floor") {
    const exo::TargetVelocity v =
        exo::EstimateTargetVelocity(p, sigma, {pt.position, VectorXd::Zero(6)}, g, lim);
    CHECK(std::abs(v.raw) < 1e-12);
    CHECK(v.saturated == doctest::Approx(0.1 * p.length() / 0.72));
  }
  SUBCASE("offsets orthogonal to the tangent are ignored with scalar gains") {
    VectorXd d = VectorXd::Ones(6);
    d -= d.dot(pt.tangent) * pt.tangent;
    const double a = exo::EstimateTargetVelocity(p, sigma, {pt.position, pt.tangent}, g, kWide).raw;
    const double b =
        exo::EstimateTargetVelocity(p, sigma, {pt.position + 0.05 * d, pt.tangent}, g, kWide).raw;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("guide torque has no tangential component at the estimated speed") {
  const SwingPath& p = GaitPath();
  const SwingGains g = Anisotropic();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 0.2);
  const exo::VelocityLimits lim = exo::VelocityLimits::FromNominal(p.length(), 0.72);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double sigma = u(rng) * p.length();
    SwingJointState s{p.Eval(sigma).position, VectorXd::Zero(6)};
    for (int j = 0; j < 6; ++j) {
      s.q[j] += n(rng);
      s.qd[j] = 5 * n(rng);
    }
    const exo::TargetVelocity v = exo::EstimateTargetVelocity(p, sigma, s, g, lim);
    const VectorXd tau = exo::SwingTorque(p, sigma, v.raw, s, g);
    worst = std::max(worst, std::abs(p.Eval(sigma).tangent.dot(tau)));
    CHECK(v.saturated >= lim.min);
    CHECK(v.saturated <= lim.max);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("gain and limit validation") {
  CHECK_THROWS_AS(SwingGains::Uniform(6, 0.0, 40.0), std::invalid_argument);
  SwingGains g = SwingGains::Uniform(6, 400.0, 40.0);
  CHECK_THROWS_AS(g.Validate(5), std::invalid_argument);
  CHECK_THROWS_AS(exo::VelocityLimits::FromNominal(1.0, 1.0, 0.0, 2.0), std::invalid_argument);
  const exo::VelocityLimits lim = exo::VelocityLimits::FromNominal(2.0, 0.5);
  CHECK(lim.min == doctest::Approx(0.4));
  CHECK(lim.max == doctest::Approx(8.0));
}

TEST_CASE("target velocity filter") {
  exo::TargetVelocityFilter pass;
  CHECK(pass.Update(1.0, 1e-3) == 1.0);
  CHECK(pass.Update(2.0, 1e-3) == 2.0);

  exo::TargetVelocityFilter lp(0.009);
  CHECK(lp.Update(1.0, 1e-3) == 1.0);
  CHECK(lp.Update(2.0, 1e-3) == doctest::Approx(1.1));
  lp.Reset();
  CHECK(lp.Update(5.0, 1e-3) == 5.0);
}
