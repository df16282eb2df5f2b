#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "soatt/kinematics.hpp"

namespace soatt::test {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// P(theta) T written out independently of the library.
inline Mat2 jacobian_by_hand(double th, double rw, double b, double d) {
  const double c = std::cos(th), s = std::sin(th), k = 0.5 * rw;
  Mat2 a;
  a << k * (c - d * s / b), k * (c + d * s / b),
       k * (s + d * c / b), k * (s - d * c / b);
  return a;
}

inline RobotParams paper_example_params() {
  RobotParams p;
  p.wheel_radius = 0.066;
  p.half_axle = 0.08;
  p.offset = 0.1;
  return p;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
  Vec2 vec(double lo, double hi) { return Vec2(uniform(lo, hi), uniform(lo, hi)); }
};

}  // namespace soatt::test
