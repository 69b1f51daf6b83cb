#include <doctest.h>

#include <cmath>
#include <vector>

#include "exo/gait.h"
#include "exo/swing_path.h"
#include "exo/time_rescale.h"

using exo::Vec2;

namespace {

const exo::PendulumParams kParams = exo::PendulumParams::Make();
const exo::SupportPolygon kFoot(Vec2::Zero(), Vec2(0.10, 0.05));

struct Fixture {
  exo::NominalGait gait = exo::GenerateSyntheticGait({}, kParams, kFoot);
  exo::SwingPath path = exo::BuildSwingPath(gait, 0);
  exo::TimeRescaler rescaler{gait, 0, path};
  double t_ss = gait.single_support(0).end - gait.single_support(0).start;
  double t0 = gait.single_support(0).start;
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "nominal rate reproduces the nominal channels") {
  const double dt = 1e-3;
  const int n = static_cast<int>(std::lround(t_ss / dt));
  // The last sample lands on the path end, where rounding may flag a clamp.
  const std::vector<double> rate(n, path.length() / t_ss);
  const exo::RescaledTrajectory r = exo::TimeRescale(rescaler, rate, dt, kParams);
  double com = 0.0, vel = 0.0, cop = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + i * dt;
    const exo::TrackingReference& ref = r.reference[i];
    com = std::max(com, (ref.state.com - gait.ComAt(t)).norm());
    vel = std::max(vel, (ref.state.com_vel - gait.StateAt(t).com_vel).norm());
    if (i > 2 && i < n - 2) cop = std::max(cop, (ref.cop - gait.CopAt(t)).norm());
  }
  CHECK(com < 1e-4);
  CHECK(vel < 1e-3);
  CHECK(cop < 1e-4);
  CHECK_FALSE(r.clamped);
}

TEST_CASE_FIXTURE(Fixture, "60 percent rate pushes the reference CoP out of the foot") {
  const double dt = 1e-3;
  const int n = static_cast<int>(std::lround(t_ss / 0.6 / dt));
  const std::vector<double> rate(n, 0.6 * path.length() / t_ss);
  const exo::RescaledTrajectory r = exo::TimeRescale(rescaler, rate, dt, kParams);
  double worst = 0.0;
  for (const exo::TrackingReference& ref : r.reference) worst = std::max(worst, kFoot.ExitDistance(ref.cop));
  CHECK(worst > 0.0);
}

TEST_CASE_FIXTURE(Fixture, "abscissa beyond the path is clamped and flagged") {
  bool clamped = false;
  const Vec2 end = rescaler.ComAtAbscissa(path.length() + 0.1, &clamped);
  CHECK(clamped);
  CHECK((end - gait.ComAt(gait.single_support(0).end)).norm() < 1e-6);
  rescaler.ComAtAbscissa(0.5 * path.length(), &clamped);
  CHECK_FALSE(clamped);
  CHECK_THROWS_AS(rescaler.Eval(0.1, 1.0, 0.0, kParams), std::invalid_argument);
}
