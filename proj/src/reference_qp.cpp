#include "soatt/reference_qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace soatt {

ReferenceSolution reference_qp_solve(const QpProblem& qp, double tol) {
  qp.validate();
  const int n = 2 * qp.num_robots();
  const int m = qp.num_rows();
  if (qp.num_robots() > 4 || m > 12)
    throw std::invalid_argument("reference_qp_solve: problem too large for enumeration");

  const Eigen::MatrixXd a = qp.dense_a();
  const Eigen::MatrixXd b = qp.dense_b();
  const VecX b_right = qp.dense_b_right();
  const Eigen::MatrixXd hess = 2.0 * a.transpose() * a;
  const VecX grad = -2.0 * a.transpose() * qp.target;

  ReferenceSolution best;
  best.objective = std::numeric_limits<double>::infinity();

  long bound_sets = 1;
  for (int k = 0; k < n; ++k) bound_sets *= 3;
  const long row_sets = 1L << m;

  std::vector<int> state(static_cast<std::size_t>(n));
  for (long bs = 0; bs < bound_sets; ++bs) {
    long code = bs;
    int fixed = 0;
    for (int k = 0; k < n; ++k) {
      state[static_cast<std::size_t>(k)] = static_cast<int>(code % 3);
      code /= 3;
      if (state[static_cast<std::size_t>(k)] != 0) ++fixed;
    }
    for (long rs = 0; rs < row_sets; ++rs) {
      const int active = fixed + __builtin_popcountl(static_cast<unsigned long>(rs));
      if (active > n) continue;
      ++best.active_sets;

      // Active constraints as C u = d, each from a "<=" inequality.
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(active, n);
      VecX d(active);
      int row = 0;
      for (int k = 0; k < n; ++k) {
        const int s = state[static_cast<std::size_t>(k)];
        if (s == 1) {
          c(row, k) = -1.0;
          d(row) = -qp.lower(k);
          ++row;
        } else if (s == 2) {
          c(row, k) = 1.0;
          d(row) = qp.upper(k);
          ++row;
        }
      }
      for (int r = 0; r < m; ++r) {
        if (!(rs & (1L << r))) continue;
        c.row(row) = b.row(r);
        d(row) = b_right(r);
        ++row;
      }

      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + active, n + active);
      kkt.topLeftCorner(n, n) = hess;
      kkt.topRightCorner(n, active) = c.transpose();
      kkt.bottomLeftCorner(active, n) = c;
      VecX rhs(n + active);
      rhs.head(n) = -grad;
      rhs.tail(active) = d;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      lu.setThreshold(1e-12);
      if (!lu.isInvertible()) continue;
      const VecX sol = lu.solve(rhs);
      const VecX u = sol.head(n);
      const VecX lambda = sol.tail(active);

      const double scale = 1.0 + u.cwiseAbs().maxCoeff();
      const double lscale = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;
      if ((lambda.array() < -tol * (1.0 + lscale)).any()) continue;
      if (((qp.lower - u).array() > tol * scale).any()) continue;
      if (((u - qp.upper).array() > tol * scale).any()) continue;
      if (m > 0 && ((b * u - b_right).array() > tol * scale).any()) continue;

      const double f = qp.objective(u);
      if (f < best.objective) {
        best.feasible = true;
        best.objective = f;
        best.udot = u;
      }
    }
  }
  if (!best.feasible) best.objective = std::numeric_limits<double>::quiet_NaN();
  return best;
}

}  // namespace soatt
