#include <cmath>
#include <numbers>

#include "doctest.h"
#include "barrier_oracle.hpp"
#include "helpers.hpp"
#include "soatt/safety.hpp"

using namespace soatt;
using soatt::test::rel_err;
using soatt::test::Robot;
using soatt::test::barrier_rate;
using soatt::test::random_robot;

namespace {

PairState bare_pair(const Vec2& p, const Vec2& v, double d_safe) {
  PairState s;
  s.rel_position = p;
  s.rel_velocity = v;
  s.d_safe = d_safe;
  s.radius_sum = d_safe;
  return s;
}

SafetyGains gains(double k1, double k2) {
  SafetyGains g;
  g.kappa1 = k1;
  g.kappa2 = k2;
  return g;
}

}  // namespace

TEST_CASE("h_proposed examples") {
  CHECK(h_proposed(bare_pair(Vec2(0.96, 0), Vec2::Zero(), 0.96), gains(1, 1)) == 0.0);
  CHECK(h_proposed(bare_pair(Vec2(2, 0), Vec2(-1, 0), 1.0), gains(1, 1)) ==
        doctest::Approx(0.0));
  CHECK(h_proposed(bare_pair(Vec2(3, 4), Vec2(1, 0), 1.0), gains(2, 1)) ==
        doctest::Approx(8.6).epsilon(1e-14));
}

TEST_CASE("coincident centres are rejected") {
  const PairState s = bare_pair(Vec2::Zero(), Vec2(1, 0), 1.0);
  CHECK_THROWS_AS(h_proposed(s, gains(1, 1)), DegenerateGeometry);
  CHECK_THROWS_AS(build_constraint_proposed(s, gains(1, 1)), DegenerateGeometry);
  CHECK_THROWS_AS(build_constraint_braking(s, gains(1, 1)), DegenerateGeometry);
}

TEST_CASE("proposed row at rest") {
  RobotParams p;
  RobotState a, b;
  a.position = Vec2(2, 0);
  const PairState s = make_pair(0, a, p, 1, b, p, 0.0);
  SafetyGains g = gains(1, 1);
  // d_safe = 0.96 here; rebuild with d_safe = 1 as in the worked example.
  PairState s1 = s;
  s1.d_safe = 1.0;
  CHECK(build_constraint_proposed(s1, g).rhs == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(build_constraint_proposed(s, g).rhs == doctest::Approx(2.0 * 1.04).epsilon(1e-15));
}

TEST_CASE("proposed row coefficients at zero heading") {
  const RobotParams p = test::paper_example_params();
  RobotState a, b;
  a.position = Vec2(1, 0);
  const ConstraintRow row = build_constraint_proposed(make_pair(0, a, p, 1, b, p, 0.0), gains(1, 1));
  CHECK(row.coeff_i(0) == doctest::Approx(-0.033).epsilon(1e-14));
  CHECK(row.coeff_i(1) == doctest::Approx(-0.033).epsilon(1e-14));
  CHECK(row.coeff_j(0) == doctest::Approx(0.033).epsilon(1e-14));
  CHECK(row.coeff_j(1) == doctest::Approx(0.033).epsilon(1e-14));
}

TEST_CASE("proposed row against finite differences of the barrier rate") {
  test::Rng rng(2024);
  int checked = 0;
  while (checked < 100) {
    const Robot a = random_robot(rng);
    const Robot b = random_robot(rng);
    if ((a.state.position - b.state.position).norm() < 0.2) continue;
    const SafetyGains g = gains(rng.uniform(0.5, 4), rng.uniform(0.5, 4));
    const PairState ps = make_pair(0, a.state, a.params, 1, b.state, b.params, 0.0);
    const ConstraintRow row = build_constraint_proposed(ps, g);
    const double r = ps.rel_position.norm();
    const Vec2 ua = rng.vec(-3, 3), ub = rng.vec(-3, 3);

    const double slack = row.rhs - row.coeff_i.dot(ua) - row.coeff_j.dot(ub);
    CHECK(rel_err(slack, r * barrier_rate(a, ua, b, ub, g, ps.d_safe)) < 1e-5);

    const double e = 1e-3;  // the rate is affine in udot
    for (int k = 0; k < 4; ++k) {
      Vec2 da = Vec2::Zero(), db = Vec2::Zero();
      (k < 2 ? da : db)(k % 2) = e;
      const double grad = r *
                          (barrier_rate(a, ua + da, b, ub + db, g, ps.d_safe) -
                           barrier_rate(a, ua - da, b, ub - db, g, ps.d_safe)) /
                          (2 * e);
      const double coeff = k < 2 ? row.coeff_i(k) : row.coeff_j(k - 2);
      CHECK(rel_err(-coeff, grad) < 1e-5);
    }
    ++checked;
  }
}

TEST_CASE("hold margin tightens the row by margin times distance") {
  RobotParams p;
  RobotState a, b;
  a.position = Vec2(1.3, 0.4);
  a.wheel_velocity = Vec2(0.5, -0.2);
  const PairState s = make_pair(0, a, p, 1, b, p, 0.0);
  SafetyGains g = gains(2, 2);
  const double base = build_constraint_proposed(s, g).rhs;
  const double base_brake = build_constraint_braking(s, g).rhs;
  g.hold_margin = 0.1;
  const double r = s.rel_position.norm();
  CHECK(build_constraint_proposed(s, g).rhs == doctest::Approx(base - 0.1 * r).epsilon(1e-14));
  CHECK(build_constraint_braking(s, g).rhs == doctest::Approx(base_brake - 0.1 * r).epsilon(1e-14));
}

TEST_CASE("swapping the pair mirrors the row") {
  test::Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const Robot a = random_robot(rng);
    const Robot b = random_robot(rng);
    const SafetyGains g = gains(1.5, 2.5);
    const ConstraintRow ab =
        build_constraint_proposed(make_pair(0, a.state, a.params, 1, b.state, b.params, 0.0), g);
    const ConstraintRow ba =
        build_constraint_proposed(make_pair(1, b.state, b.params, 0, a.state, a.params, 0.0), g);
    CHECK((ab.coeff_i - ba.coeff_j).norm() < 1e-12);
    CHECK((ab.coeff_j - ba.coeff_i).norm() < 1e-12);
    CHECK(rel_err(ab.rhs, ba.rhs) < 1e-12);
  }
}

TEST_CASE("obstacle rows put no weight on the obstacle") {
  RobotParams p;
  RobotState a;
  a.position = Vec2(2, 0);
  a.wheel_velocity = Vec2(1, 1);
  const PairState s = make_obstacle_pair(0, a, p, 3, Vec2::Zero(), 0.5, 0.0);
  CHECK(s.j_is_obstacle);
  CHECK(s.d_safe == doctest::Approx(0.98));
  const ConstraintRow row = build_constraint_proposed(s, gains(1, 1));
  CHECK(row.coeff_j.isZero(0.0));
  CHECK(row.j_is_obstacle);
}

TEST_CASE("braking baseline") {
  CHECK(h_braking(bare_pair(Vec2(0.96, 0), Vec2::Zero(), 0.96)) == 0.0);
  PairState s = bare_pair(Vec2(2, 0), Vec2(-1, 0), 1.0);
  s.max_accel_sum = 4.0;
  CHECK(h_braking(s) == doctest::Approx(1.8284271247461903).epsilon(1e-14));
  CHECK(braking_distance(1.0, 4.0) == doctest::Approx(0.125));
  // Inside d_safe the root is clamped at zero.
  PairState inside = bare_pair(Vec2(0.5, 0), Vec2(0.2, 0), 1.0);
  CHECK(h_braking(inside) == doctest::Approx(0.2));
}

TEST_CASE("conservative velocity inequality") {
  SafetyGains g;
  g.varsigma = 1.0;
  const VelocityInequality sep = velocity_conservative(bare_pair(Vec2(2, 0), Vec2(1, 0), 1.0), g, 1.0);
  CHECK(sep.slack() > 0.0);
  const VelocityInequality edge = velocity_conservative(bare_pair(Vec2(1, 0), Vec2::Zero(), 1.0), g, 1.0);
  CHECK(edge.lhs == 0.0);
  CHECK(edge.rhs == 0.0);
  CHECK(edge.satisfied());
  const VelocityInequality bad = velocity_conservative(bare_pair(Vec2(1, 0), Vec2(-1, 0), 1.0), g, 1.0);
  CHECK(bad.lhs == 2.0);
  CHECK(bad.rhs == 0.0);
  CHECK_FALSE(bad.satisfied());
}

TEST_CASE("beta gate") {
  CHECK(beta_gate(bare_pair(Vec2(0.5, 0), Vec2(-1, 0), 1.0)) == 1);
  CHECK(beta_gate(bare_pair(Vec2(2, 0), Vec2(-1, 0), 1.0)) == 0);
  CHECK(beta_gate(bare_pair(Vec2(0.5, 0), Vec2(1, 0), 1.0)) == 0);
  test::Rng rng(9);
  for (int k = 0; k < 1000; ++k) {
    const PairState s = bare_pair(rng.vec(-2, 2), rng.vec(-2, 2), rng.uniform(0.1, 2));
    const int want =
        (s.rel_position.dot(s.rel_velocity) < 0 && s.rel_position.norm() < s.d_safe) ? 1 : 0;
    CHECK(beta_gate(s) == want);
  }
}

TEST_CASE("adaptive radius") {
  SafetyGains g;
  g.rho = 2.0;
  g.sigma = 0.5;
  const double D = 3.0, r = 1.0;
  PairState s = bare_pair(Vec2(1, 0), Vec2(0.25, 0), r);  // p.v = sigma / rho
  CHECK(adaptive_d_safe(s, g, D) == doctest::Approx(2.0).epsilon(1e-15));
  s.rel_velocity = Vec2(1e9, 0);
  CHECK(adaptive_d_safe(s, g, D) == doctest::Approx(r).epsilon(1e-6));
  s.rel_velocity = Vec2(-1e9, 0);
  CHECK(adaptive_d_safe(s, g, D) == doctest::Approx(D).epsilon(1e-6));
  double prev = D + 1.0;
  for (int k = -200; k <= 200; ++k) {
    s.rel_velocity = Vec2(0.05 * k, 0);
    const double d = adaptive_d_safe(s, g, D);
    CHECK(d < prev);
    CHECK(d > r);
    CHECK(d < D);
    prev = d;
  }
}

TEST_CASE("gated baseline skips pairs outside the gate") {
  const PairState s = bare_pair(Vec2(2, 0), Vec2(-1, 0), 1.0);
  CHECK_FALSE(build_constraint(CaStrategy::VelocityGated, s, SafetyGains{}, 3.0).has_value());
  CHECK(build_constraint(CaStrategy::VelocityConservative, s, SafetyGains{}, 3.0).has_value());
}

TEST_CASE("strategy names round-trip") {
  for (auto s : {CaStrategy::Proposed, CaStrategy::Braking, CaStrategy::VelocityConservative,
                 CaStrategy::VelocityGated, CaStrategy::AdaptiveRadius})
    CHECK(parse_ca_strategy(to_string(s)) == s);
  CHECK_THROWS_AS(parse_ca_strategy("euclid"), std::invalid_argument);
}

TEST_CASE("SafetyGains::validate") {
  SafetyGains g;
  CHECK_NOTHROW(g.validate());
  g.kappa1 = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = SafetyGains{};
  g.hold_margin = -1.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
