#include "soatt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace soatt {

namespace {

Vec2 block(const VecX& v, int k) { return v.segment<2>(2 * k); }

void check_finite_rows(const VecX& eta) {
  for (Eigen::Index r = 0; r < eta.size(); ++r) {
    if (!std::isfinite(eta[r]))
      throw SolverError("non-finite multiplier for pair row " + std::to_string(r),
                        static_cast<int>(r));
  }
}

void check_finite_robots(const VecX& udot) {
  for (Eigen::Index k = 0; k < udot.size(); ++k) {
    if (!std::isfinite(udot[k]))
      throw SolverError("non-finite wheel acceleration for robot " +
                            std::to_string(k / 2),
                        -1);
  }
}

void check_step_args(double eps, double dt) {
  if (!(eps > 0.0)) throw std::invalid_argument("ode_step: eps must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("ode_step: dt must be > 0");
}

double row_value(const QpProblem& qp, int r, const VecX& udot) {
  const ConstraintRow& row = qp.rows[static_cast<std::size_t>(r)];
  double value = row.coeff_i.dot(block(udot, row.i));
  if (!row.j_is_obstacle) value += row.coeff_j.dot(block(udot, row.j));
  return value;
}

// Contribution of rows touching robot k to B^T eta, gathered in row order.
Vec2 gather_bt(const QpProblem& qp, int k, const VecX& eta) {
  Vec2 acc = Vec2::Zero();
  const auto begin = static_cast<std::size_t>(qp.incidence_start[static_cast<std::size_t>(k)]);
  const auto end = static_cast<std::size_t>(qp.incidence_start[static_cast<std::size_t>(k) + 1]);
  for (std::size_t e = begin; e < end; ++e) {
    const int code = qp.incidence[e];
    if (code >= 0) {
      acc += qp.rows[static_cast<std::size_t>(code)].coeff_i * eta[code];
    } else {
      const int r = -code - 1;
      acc += qp.rows[static_cast<std::size_t>(r)].coeff_j * eta[r];
    }
  }
  return acc;
}

}  // namespace

void QpProblem::finalize() {
  const int n = num_robots();
  std::vector<int> counts(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const ConstraintRow& row = rows[r];
    if (row.i < 0 || row.i >= n || (!row.j_is_obstacle && (row.j < 0 || row.j >= n)))
      throw std::invalid_argument("qp: row " + std::to_string(r) +
                                  " references an invalid robot");
    ++counts[static_cast<std::size_t>(row.i) + 1];
    if (!row.j_is_obstacle) ++counts[static_cast<std::size_t>(row.j) + 1];
  }
  for (int k = 0; k < n; ++k) counts[static_cast<std::size_t>(k) + 1] += counts[static_cast<std::size_t>(k)];
  incidence_start = counts;
  incidence.assign(static_cast<std::size_t>(counts.back()), 0);
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (int r = 0; r < num_rows(); ++r) {
    const ConstraintRow& row = rows[static_cast<std::size_t>(r)];
    incidence[static_cast<std::size_t>(fill[static_cast<std::size_t>(row.i)]++)] = r;
    if (!row.j_is_obstacle)
      incidence[static_cast<std::size_t>(fill[static_cast<std::size_t>(row.j)]++)] = -(r + 1);
  }
}

void QpProblem::validate() const {
  const auto n = static_cast<Eigen::Index>(2 * num_robots());
  if (target.size() != n || lower.size() != n || upper.size() != n)
    throw std::invalid_argument("qp: target/bounds must have 2N entries");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(lower[k] <= upper[k]))
      throw std::invalid_argument("qp: lower bound exceeds upper bound at " +
                                  std::to_string(k));
  }
  if (!row_keys.empty() && row_keys.size() != rows.size())
    throw std::invalid_argument("qp: row_keys must match rows");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const ConstraintRow& row = rows[r];
    if (row.i < 0 || row.i >= num_robots() ||
        (!row.j_is_obstacle && (row.j < 0 || row.j >= num_robots() || row.j == row.i)))
      throw std::invalid_argument("qp: row " + std::to_string(r) +
                                  " references an invalid robot");
    if (!row.coeff_i.allFinite() || !row.coeff_j.allFinite() || !std::isfinite(row.rhs))
      throw std::invalid_argument("qp: row " + std::to_string(r) + " is not finite");
    if (r > 0 && !row_keys.empty() && !(row_keys[r - 1] < row_keys[r]))
      throw std::invalid_argument("qp: row keys must be strictly increasing");
  }
  if (incidence_start.size() != static_cast<std::size_t>(num_robots()) + 1)
    throw std::invalid_argument("qp: incidence not built (call finalize)");
}

VecX QpProblem::apply_b(const VecX& udot) const {
  VecX out(num_rows());
  for (int r = 0; r < num_rows(); ++r) out[r] = row_value(*this, r, udot);
  return out;
}

VecX QpProblem::apply_bt(const VecX& eta) const {
  VecX out = VecX::Zero(2 * num_robots());
  for (int r = 0; r < num_rows(); ++r) {
    const ConstraintRow& row = rows[static_cast<std::size_t>(r)];
    out.segment<2>(2 * row.i) += row.coeff_i * eta[r];
    if (!row.j_is_obstacle) out.segment<2>(2 * row.j) += row.coeff_j * eta[r];
  }
  return out;
}

double QpProblem::objective(const VecX& udot) const {
  double total = 0.0;
  for (int k = 0; k < num_robots(); ++k) {
    total += (jac[static_cast<std::size_t>(k)] * block(udot, k) - block(target, k))
                 .squaredNorm();
  }
  return total;
}

double QpProblem::max_violation(const VecX& udot) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < num_rows(); ++r) {
    worst = std::max(worst, row_value(*this, r, udot) - rows[static_cast<std::size_t>(r)].rhs);
  }
  return worst;
}

Eigen::MatrixXd QpProblem::dense_a() const {
  const int n = num_robots();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) a.block<2, 2>(2 * k, 2 * k) = jac[static_cast<std::size_t>(k)];
  return a;
}

Eigen::MatrixXd QpProblem::dense_b() const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(num_rows(), 2 * num_robots());
  for (int r = 0; r < num_rows(); ++r) {
    const ConstraintRow& row = rows[static_cast<std::size_t>(r)];
    b.block<1, 2>(r, 2 * row.i) = row.coeff_i.transpose();
    if (!row.j_is_obstacle) b.block<1, 2>(r, 2 * row.j) = row.coeff_j.transpose();
  }
  return b;
}

VecX QpProblem::dense_b_right() const {
  VecX out(num_rows());
  for (int r = 0; r < num_rows(); ++r) out[r] = rows[static_cast<std::size_t>(r)].rhs;
  return out;
}

QpProblem assemble_qp(std::span<const Mat2> jacobians, std::span<const Vec2> targets,
                      std::vector<ConstraintRow> rows,
                      std::vector<std::int64_t> row_keys,
                      std::span<const Vec2> lower, std::span<const Vec2> upper) {
  const std::size_t n = jacobians.size();
  if (targets.size() != n || lower.size() != n || upper.size() != n)
    throw std::invalid_argument("assemble_qp: per-robot inputs disagree in length");
  if (row_keys.size() != rows.size())
    throw std::invalid_argument("assemble_qp: one key per row required");
  QpProblem qp;
  qp.jac.assign(jacobians.begin(), jacobians.end());
  qp.target.resize(static_cast<Eigen::Index>(2 * n));
  qp.lower.resize(static_cast<Eigen::Index>(2 * n));
  qp.upper.resize(static_cast<Eigen::Index>(2 * n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto at = static_cast<Eigen::Index>(2 * k);
    qp.target.segment<2>(at) = targets[k];
    qp.lower.segment<2>(at) = lower[k];
    qp.upper.segment<2>(at) = upper[k];
  }
  qp.rows = std::move(rows);
  qp.row_keys = std::move(row_keys);
  qp.finalize();
  qp.validate();
  return qp;
}

SolverState SolverState::zeros(const QpProblem& qp) {
  return {VecX::Zero(2 * qp.num_robots()), VecX::Zero(qp.num_rows())};
}

VecX carry_multipliers(std::span<const std::int64_t> prev_keys, const VecX& prev_eta,
                       std::span<const std::int64_t> next_keys) {
  if (static_cast<Eigen::Index>(prev_keys.size()) != prev_eta.size())
    throw std::invalid_argument("carry_multipliers: key/multiplier length mismatch");
  VecX eta = VecX::Zero(static_cast<Eigen::Index>(next_keys.size()));
  std::size_t p = 0;
  for (std::size_t r = 0; r < next_keys.size(); ++r) {
    while (p < prev_keys.size() && prev_keys[p] < next_keys[r]) ++p;
    if (p < prev_keys.size() && prev_keys[p] == next_keys[r])
      eta[static_cast<Eigen::Index>(r)] = prev_eta[static_cast<Eigen::Index>(p)];
  }
  return eta;
}

VecX projection_box(const VecX& x, const VecX& lo, const VecX& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

SolverState ode_step_serial(const SolverState& s, const QpProblem& qp, double eps,
                            double dt) {
  check_step_args(eps, dt);
  const double h = dt / eps;
  const int n = qp.num_robots();
  const int m = qp.num_rows();

  VecX grad = qp.apply_bt(s.eta);
  for (int k = 0; k < n; ++k) {
    const Mat2& a = qp.jac[static_cast<std::size_t>(k)];
    grad.segment<2>(2 * k) +=
        2.0 * a.transpose() * (a * block(s.udot, k) - block(qp.target, k));
  }
  const VecX proj = projection_box(s.udot - grad, qp.lower, qp.upper);

  SolverState next;
  next.udot = s.udot + h * (proj - s.udot);
  next.eta.resize(m);
  for (int r = 0; r < m; ++r) {
    const double shifted =
        row_value(qp, r, s.udot) - qp.rows[static_cast<std::size_t>(r)].rhs + s.eta[r];
    next.eta[r] = s.eta[r] + h * (std::max(0.0, shifted) - s.eta[r]);
  }
  check_finite_rows(next.eta);
  check_finite_robots(next.udot);
  return next;
}

namespace {

// One update of both equations into preallocated outputs. Returns false if
// any produced value is non-finite.
bool step_into(const QpProblem& qp, const VecX& udot, const VecX& eta, double h,
               VecX& udot_next, VecX& eta_next) {
  const int n = qp.num_robots();
  const int m = qp.num_rows();
  const bool wide = (n + m) >= kParallelThreshold;
  bool finite = true;

#pragma omp parallel if (wide) reduction(&& : finite)
  {
#pragma omp for schedule(static)
    for (int k = 0; k < n; ++k) {
      const Mat2& a = qp.jac[static_cast<std::size_t>(k)];
      const Vec2 u = block(udot, k);
      Vec2 grad = gather_bt(qp, k, eta);
      grad += 2.0 * a.transpose() * (a * u - block(qp.target, k));
      const Vec2 proj = (u - grad)
                            .cwiseMax(block(qp.lower, k))
                            .cwiseMin(block(qp.upper, k));
      const Vec2 next = u + h * (proj - u);
      finite = finite && next.allFinite();
      udot_next.segment<2>(2 * k) = next;
    }
#pragma omp for schedule(static)
    for (int r = 0; r < m; ++r) {
      const double shifted =
          row_value(qp, r, udot) - qp.rows[static_cast<std::size_t>(r)].rhs + eta[r];
      const double next = eta[r] + h * (std::max(0.0, shifted) - eta[r]);
      finite = finite && std::isfinite(next);
      eta_next[r] = next;
    }
  }
  return finite;
}

}  // namespace

SolverState ode_step(const SolverState& s, const QpProblem& qp, double eps, double dt) {
  check_step_args(eps, dt);
  SolverState next;
  next.udot.resize(2 * qp.num_robots());
  next.eta.resize(qp.num_rows());
  if (!step_into(qp, s.udot, s.eta, dt / eps, next.udot, next.eta)) {
    check_finite_rows(next.eta);
    check_finite_robots(next.udot);
  }
  return next;
}

SolveResult solve_step(const SolverState& s, const QpProblem& qp, double eps, double dt,
                       int max_inner, double tol) {
  if (max_inner < 1) throw std::invalid_argument("solve_step: max_inner must be >= 1");
  check_step_args(eps, dt);
  const double h = dt / eps;
  SolveResult result{s, 0.0, 0};
  SolverState next{VecX(s.udot.size()), VecX(s.eta.size())};
  double first = -1.0;
  for (int it = 0; it < max_inner; ++it) {
    if (!step_into(qp, result.state.udot, result.state.eta, h, next.udot, next.eta)) {
      check_finite_rows(next.eta);
      check_finite_robots(next.udot);
    }
    double change = (next.udot - result.state.udot).lpNorm<Eigen::Infinity>();
    if (next.eta.size() > 0)
      change = std::max(change, (next.eta - result.state.eta).lpNorm<Eigen::Infinity>());
    std::swap(result.state, next);
    result.residual = change;
    result.iterations = it + 1;
    if (first < 0.0) first = change;
    if (change > 10.0 * std::max(first, 1e-6))
      throw SolverError("projection dynamics diverged: residual " + std::to_string(change) +
                            " after " + std::to_string(it + 1) + " iterations",
                        -1);
    if (change < tol) break;
  }
  return result;
}

}  // namespace soatt
