#pragma once

#include "soatt/solver.hpp"

namespace soatt {

struct ReferenceSolution {
  bool feasible = false;
  VecX udot;               // empty when infeasible
  double objective = 0.0;
  long active_sets = 0;    // candidate sets examined
};

/// Exact minimizer by enumerating active sets: every variable sits at its
/// lower bound, upper bound or is free, and every row of B is active or
/// not. Each independent active set gives one KKT system; the first point
/// that is primal and dual feasible is the optimum (the objective is
/// strictly convex). Test oracle only: N <= 4 and M <= 12.
ReferenceSolution reference_qp_solve(const QpProblem& qp, double tol = 1e-9);

}  // namespace soatt
