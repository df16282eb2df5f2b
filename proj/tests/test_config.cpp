#include <filesystem>
#include <string>
#include <system_error>

#include "doctest.h"
#include "soatt/config.hpp"

using namespace soatt;

namespace {

const char* kMinimal = R"(robots:
  layout: circle
  count: 4
  radius: 3.0
  speed: 1.0
)";

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_CASE("minimal config takes the defaults") {
  const ScenarioConfig cfg = parse_config(kMinimal);
  CHECK(cfg.num_robots() == 4);
  CHECK(cfg.ca == CaStrategy::Proposed);
  CHECK(cfg.deadlock == DeadlockStrategy::AuxiliaryTerm);
  CHECK(cfg.dt == 0.005);
  CHECK(cfg.safety.hold_margin == 0.0);
}

TEST_CASE("all sections are read") {
  const std::string text = std::string(kMinimal) + R"(gains:
  kappa1: 3.0
  kappa2: 1.5
  hold_margin: 0.2
  q_deg: 90
strategy:
  ca: braking
  deadlock: sbc_disturbance
  detector: position_dwell
sim:
  name: demo
  dt: 0.01
  total_time: 4.0
  seed: 7
  obstacles:
    - {center: [0, 0], radius: 0.5}
  solver:
    step: 0.0005
    inner_iterations: 30
    fallback_brake: false
    eta_floor: 0
)";
  const ScenarioConfig cfg = parse_config(text);
  CHECK(cfg.safety.kappa1 == 3.0);
  CHECK(cfg.safety.kappa2 == 1.5);
  CHECK(cfg.safety.hold_margin == 0.2);
  CHECK(cfg.tracking.q == doctest::Approx(1.5707963267948966));
  CHECK(cfg.ca == CaStrategy::Braking);
  CHECK(cfg.deadlock == DeadlockStrategy::SbcDisturbance);
  CHECK(cfg.detector == DeadlockDetector::PositionDwell);
  CHECK(cfg.name == "demo");
  CHECK(cfg.dt == 0.01);
  CHECK(cfg.seed == 7);
  REQUIRE(cfg.obstacles.size() == 1);
  CHECK(cfg.obstacles[0].radius == 0.5);
  CHECK(cfg.solver.inner_iterations == 30);
  CHECK_FALSE(cfg.solver.fallback_brake);
  CHECK(cfg.solver.eta_floor == 0.0);
}

TEST_CASE("unknown keys are reported with their line") {
  CHECK(error_line(std::string(kMinimal) + "gains:\n  kapa1: 2.0\n") == 7);
  CHECK(error_line(std::string(kMinimal) + "extra: 1\n") == 6);
  CHECK(error_line("robots:\n  layout: circle\n  cuont: 3\n") == 3);
}

TEST_CASE("syntax errors carry a line") {
  CHECK(error_line("robots:\n  layout: [circle\n  count: 3\n") > 0);
  CHECK(error_line("robots: {a: 1\n") > 0);
}

TEST_CASE("bad values are rejected") {
  CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "strategy:\n  ca: teleport\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "gains:\n  kappa1: fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "gains:\n  hold_margin: -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("robots:\n  layout: circle\n  count: 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gains:\n  kappa1: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("- 1\n- 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("robots:\n  layout: spiral\n"), ConfigError);
  // Robots start too close together.
  CHECK_THROWS_AS(parse_config("robots:\n  layout: circle\n  count: 40\n  radius: 6\n"), ConfigError);
}

TEST_CASE("error messages name the field") {
  try {
    parse_config(std::string(kMinimal) + "strategy:\n  deadlock: nope\n", "x.yaml");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.field == "strategy.deadlock");
    CHECK(e.line == 7);
    CHECK(std::string(e.what()).find("x.yaml:7") == 0);
  }
}

TEST_CASE("overrides replace the file values") {
  ConfigOverrides o;
  o.count = 7;
  o.ca = CaStrategy::Braking;
  o.deadlock = DeadlockStrategy::None;
  const ScenarioConfig cfg = parse_config(kMinimal, "<s>", o);
  CHECK(cfg.num_robots() == 7);
  CHECK(cfg.ca == CaStrategy::Braking);
  CHECK(cfg.deadlock == DeadlockStrategy::None);
}

TEST_CASE("explicit robot lists") {
  const ScenarioConfig cfg = parse_config(R"(robots:
  list:
    - trajectory: {kind: line, start: [0, 0], goal: [4, 0], speed: 1}
    - trajectory: {kind: hold, start: [0, 3]}
      initial_heading_deg: 90
)");
  REQUIRE(cfg.num_robots() == 2);
  CHECK(cfg.robots[0].trajectory.kind == Trajectory::Kind::Line);
  CHECK(cfg.robots[1].trajectory.kind == Trajectory::Kind::Hold);
  CHECK_THROWS_AS(parse_config("robots:\n  list:\n    - {initial_heading_deg: 3}\n"), ConfigError);
}

TEST_CASE("shipped configs parse") {
  const std::filesystem::path dir = std::filesystem::path(SOATT_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path()));
    ++seen;
  }
  CHECK(seen >= 4);
  CHECK_THROWS_AS(load_config(dir / "missing.yaml"), std::system_error);
}
