#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "exo/gait.h"

using exo::GaitPhase;
using exo::NominalGait;
using exo::SupportPolygon;
using exo::Vec2;

namespace {

const exo::PendulumParams kParams = exo::PendulumParams::Make();
const SupportPolygon kFoot(Vec2::Zero(), Vec2(0.10, 0.05));

NominalGait DefaultGait() { return exo::GenerateSyntheticGait({}, kParams, kFoot); }

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
  return out;
}

std::string Join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + v[i];
  return out;
}

std::string Saved(const NominalGait& g) {
  std::ostringstream out;
  exo::SaveGait(g, out);
  return out.str();
}

NominalGait Load(const std::string& text) {
  std::istringstream in(text);
  return exo::LoadGait(in);
}

}  // namespace

TEST_CASE("default synthetic gait satisfies its invariants") {
  const NominalGait g = DefaultGait();
  CHECK(g.num_single_support() == 1);
  REQUIRE(g.leading_double_support().has_value());
  const exo::PhaseSegment& ss = g.single_support(0);
  CHECK(ss.kind == GaitPhase::kSingleLeft);
  CHECK(ss.last - ss.first + 1 >= NominalGait::kMinSamplesPerStep);
  CHECK(g.duration() == doctest::Approx(0.9));
  CHECK(ss.end - ss.start == doctest::Approx(0.72).epsilon(1e-9));
  CHECK_FALSE(exo::FindCopViolation(g, kFoot, 0.0).has_value());
  for (const exo::GaitSample& s : g.samples()) CHECK(s.com.z() == doctest::Approx(0.9));

  SUBCASE("one step maps the end state back onto the start") {
    const Vec2 d = g.NextFoothold();
    CHECK(d.x() == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(d.y() == doctest::Approx(-0.3).epsilon(1e-9));
    const exo::LipState back = exo::ToNextStepFrame(g.final_state(), d);
    CHECK((back.com - g.initial_state().com).norm() < 1e-6);
    CHECK((back.com_vel - g.initial_state().com_vel).norm() < 5e-5);
  }
  SUBCASE("CoM channel obeys the pendulum at interior samples") {
    const double h = 1e-4;
    for (double t : {0.1, 0.4, 0.6, 0.85}) {
      const Vec2 acc = (g.ComAt(t + h) - 2.0 * g.ComAt(t) + g.ComAt(t - h)) / (h * h);
      CHECK((exo::CopFromAccel(g.ComAt(t), acc, kParams) - g.CopAt(t)).norm() < 2e-3);
    }
  }
}

TEST_CASE("marching in place keeps the CoM over the foot center sagittally") {
  exo::SyntheticGaitOptions opt;
  opt.step_length = 0.0;
  const NominalGait g = exo::GenerateSyntheticGait(opt, kParams, kFoot);
  for (const exo::GaitSample& s : g.samples()) CHECK(std::abs(s.com.x()) < 1e-9);
  const exo::LipState x0 = g.initial_state(), xf = g.final_state();
  CHECK(xf.com.x() == doctest::Approx(x0.com.x()));
  CHECK(std::abs(xf.com_vel.y() + x0.com_vel.y()) < 5e-5);
}

TEST_CASE("infeasible step duration is reported") {
  exo::SyntheticGaitOptions opt;
  opt.step_duration = 0.01;
  CHECK_THROWS_AS(exo::GenerateSyntheticGait(opt, kParams, kFoot), exo::InfeasibleGaitError);
  opt.step_duration = -1.0;
  CHECK_THROWS_AS(exo::GenerateSyntheticGait(opt, kParams, kFoot), std::invalid_argument);
}

TEST_CASE("gait csv round trip") {
  const NominalGait g = DefaultGait();
  const NominalGait r = Load(Saved(g));
  REQUIRE(r.samples().size() == g.samples().size());
  double worst = 0.0;
  for (std::size_t i = 0; i < g.samples().size(); ++i) {
    const exo::GaitSample &a = g.samples()[i], &b = r.samples()[i];
    worst = std::max({worst, std::abs(a.t - b.t), (a.q - b.q).cwiseAbs().maxCoeff(),
                      (a.com - b.com).cwiseAbs().maxCoeff(),
                      (a.cop - b.cop).cwiseAbs().maxCoeff()});
    CHECK(a.phase == b.phase);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("gait csv errors") {
  const std::vector<std::string> lines = Lines(Saved(DefaultGait()));

  SUBCASE("empty file") {
    CHECK_THROWS_AS(Load(""), exo::GaitError);
  }
  SUBCASE("missing column is named") {
    std::vector<std::string> out;
    for (const std::string& l : lines) {
      std::vector<std::string> f = Split(l);
      f.erase(f.begin() + 17);  // cop_y
      out.push_back(Join(f, ','));
    }
    try {
      Load(Join(out, '\n'));
      FAIL("expected an error");
    } catch (const exo::GaitError& e) {
      CHECK(std::string(e.what()).find("cop_y") != std::string::npos);
      CHECK(e.row() == 1);
    }
  }
  SUBCASE("non-uniform grid reports the file line") {
    std::vector<std::string> out = lines;
    std::vector<std::string> f = Split(out[6]);
    f[0] = std::to_string(std::stod(f[0]) + 1e-4);
    out[6] = Join(f, ',');
    try {
      Load(Join(out, '\n'));
      FAIL("expected an error");
    } catch (const exo::GaitError& e) {
      CHECK(e.row() == 7);
    }
  }
  SUBCASE("bad phase label") {
    std::vector<std::string> out = lines;
    std::vector<std::string> f = Split(out[3]);
    f.back() = "hop";
    out[3] = Join(f, ',');
    CHECK_THROWS_AS(Load(Join(out, '\n')), exo::GaitError);
  }
}

TEST_CASE("mirrored gait swaps sides") {
  const NominalGait g = DefaultGait();
  const NominalGait m = g.Mirrored();
  CHECK(m.single_support(0).kind == GaitPhase::kSingleRight);
  // Yaw, roll and ankle roll flip sign; the legs trade places.
  const double sign[6] = {-1, -1, 1, 1, 1, -1};
  for (std::size_t i = 0; i < g.samples().size(); i += 37) {
    const exo::GaitSample &a = g.samples()[i], &b = m.samples()[i];
    CHECK(b.com.y() == -a.com.y());
    CHECK(b.cop.y() == -a.cop.y());
    for (int j = 0; j < 6; ++j) {
      CHECK(b.q[j] == sign[j] * a.q[6 + j]);
      CHECK(b.q[6 + j] == sign[j] * a.q[j]);
    }
  }
  CHECK(exo::SwingLegOffset(GaitPhase::kSingleLeft) == 6);
  CHECK(exo::SwingLegOffset(GaitPhase::kSingleRight) == 0);
}

TEST_CASE("frames and polygons") {
  const Vec2 d(0.7, -0.3);
  exo::LipState s;
  s.com = {0.5, -0.2};
  s.com_vel = {0.3, 0.1};
  const exo::LipState n = exo::ToNextStepFrame(s, d);
  CHECK(n.com.isApprox(Vec2(-0.2, -0.1)));
  CHECK(n.com_vel.isApprox(Vec2(0.3, -0.1)));
  const exo::LipState b = exo::FromNextStepFrame(n, d);
  CHECK(b.com.isApprox(s.com));
  CHECK(b.com_vel.isApprox(s.com_vel));

  CHECK(exo::RearFoot(d).isApprox(Vec2(-0.7, -0.3)));
  const SupportPolygon ds = exo::DoubleSupportPolygon(kFoot, d);
  CHECK(ds.lower().isApprox(Vec2(-0.8, -0.35)));
  CHECK(ds.upper().isApprox(Vec2(0.1, 0.05)));
  CHECK(exo::StanceFoot(SupportPolygon({0, 0.02}, {0.1, 0.05}), GaitPhase::kSingleRight)
            .center()
            .isApprox(Vec2(0, -0.02)));
}
