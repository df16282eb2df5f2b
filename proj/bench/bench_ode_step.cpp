#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "soatt/solver.hpp"

using namespace soatt;

namespace {

// N robots, each constrained against its next three neighbours.
QpProblem ring_problem(int n) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RobotParams params;
  std::vector<Mat2> jac;
  std::vector<Vec2> target, lo, hi;
  for (int k = 0; k < n; ++k) {
    jac.push_back(jacobian(3.0 * u(gen), params));
    target.emplace_back(6.0 * u(gen), 6.0 * u(gen));
    lo.emplace_back(-4.0, -4.0);
    hi.emplace_back(4.0, 4.0);
  }
  std::vector<ConstraintRow> rows;
  std::vector<std::int64_t> keys;
  for (int i = 0; i < n; ++i)
    for (int d = 1; d <= 3 && i + d < n; ++d) {
      ConstraintRow r;
      r.i = i;
      r.j = i + d;
      r.coeff_i = Vec2(u(gen), u(gen));
      r.coeff_j = Vec2(u(gen), u(gen));
      r.rhs = u(gen);
      rows.push_back(r);
      keys.push_back(static_cast<std::int64_t>(i) * n + i + d);
    }
  return assemble_qp(jac, target, std::move(rows), std::move(keys), lo, hi);
}

template <SolverState (*Step)(const SolverState&, const QpProblem&, double, double)>
void bm_step(benchmark::State& state) {
  const QpProblem qp = ring_problem(static_cast<int>(state.range(0)));
  SolverState s = SolverState::zeros(qp);
  for (auto _ : state) {
    s = Step(s, qp, 0.005, 0.0005);
    benchmark::DoNotOptimize(s.udot.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bm_step<ode_step_serial>)->Name("ode_step_serial")->RangeMultiplier(4)->Range(16, 16384);
BENCHMARK(bm_step<ode_step>)->Name("ode_step")->RangeMultiplier(4)->Range(16, 16384);

BENCHMARK_MAIN();
