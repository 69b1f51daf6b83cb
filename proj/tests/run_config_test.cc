#include <doctest.h>

#include <sstream>
#include <string>

#include "exo/run_config.h"

using exo::ConfigError;
using exo::RunConfig;

namespace {

void Apply(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  exo::ApplyConfigFile(c, in);
}

}  // namespace

TEST_CASE("defaults validate and every key round-trips through the echo") {
  RunConfig c;
  CHECK_NOTHROW(c.Validate());
  std::ostringstream echo;
  exo::WriteConfig(echo, c);

  RunConfig back;
  back.steps = 3;
  back.sim.stabilizer.gains.kp.x() = 9.0;
  Apply(back, echo.str());
  for (const std::string& key : exo::ConfigKeys()) {
    CHECK_MESSAGE(exo::GetConfigValue(back, key) == exo::GetConfigValue(c, key), key);
  }
}

TEST_CASE("config file values") {
  RunConfig c;
  Apply(c,
        "# comment\n"
        "\n"
        "strategy = tr\n"
        "profile = square:0.6,0.3   # trailing comment\n"
        "gait.step_length = 0.5\n"
        "stabilizer.kp = 3,4\n"
        "stabilizer.ki = 0.7\n"
        "foot.half_extents = 0.12,0.06\n"
        "map.durations = 0.1,0.2\n"
        "fall.terminal_error = 0.05\n");
  CHECK(c.strategy == exo::Strategy::kTimeRescaling);
  CHECK(c.profile == "square:0.6,0.3");
  CHECK(c.gait.step_length == 0.5);
  CHECK(c.sim.stabilizer.gains.kp == exo::Vec2(3, 4));
  CHECK(c.sim.stabilizer.gains.ki == exo::Vec2(0.7, 0.7));
  CHECK(c.sim.foot.half_extents() == exo::Vec2(0.12, 0.06));
  CHECK(c.map_durations == std::vector<double>{0.1, 0.2});
  CHECK(c.sim.terminal_error_max == 0.05);
  CHECK_NOTHROW(c.Validate());
}

TEST_CASE("config errors") {
  RunConfig c;
  CHECK_THROWS_AS(exo::SetConfigValue(c, "no.such.key", "1"), ConfigError);
  CHECK_THROWS_AS(exo::SetConfigValue(c, "steps", "ten"), ConfigError);
  CHECK_THROWS_AS(exo::SetConfigValue(c, "steps", "2.5"), ConfigError);
  CHECK_THROWS_AS(exo::SetConfigValue(c, "strategy", "fast"), ConfigError);
  CHECK_THROWS_AS(exo::SetConfigValue(c, "lip.gravity", "1e"), ConfigError);

  try {
    Apply(c, "steps = 3\nbogus = 1\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(Apply(c, "steps 3\n"), ConfigError);

  RunConfig bad;
  bad.steps = 0;
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = {};
  bad.profile = "square:1";
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = {};
  exo::SetConfigValue(bad, "planner.knots", "4");
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
}

TEST_CASE("every key has help text") {
  for (const std::string& key : exo::ConfigKeys()) CHECK_FALSE(exo::ConfigHelp(key).empty());
  CHECK_THROWS_AS(exo::ConfigHelp("nope"), ConfigError);
}
