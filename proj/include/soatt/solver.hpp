#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "soatt/kinematics.hpp"
#include "soatt/safety.hpp"

namespace soatt {

using VecX = Eigen::VectorXd;

/// Per-step quadratic program
///
///   min   || A_blk udot - dzr ||^2
///   s.t.  lower <= udot <= upper
///         B udot <= B_right
///
/// A_blk is block diagonal (one 2x2 Jacobian per robot) and every row of B
/// touches at most two robot blocks, so both are stored structurally.
struct QpProblem {
  std::vector<Mat2> jac;     // A_blk diagonal blocks
  VecX target;               // dzr, 2N
  std::vector<ConstraintRow> rows;  // B and B_right; i/j are robot indices
  std::vector<std::int64_t> row_keys;  // stable pair identity for warm starts
  VecX lower;
  VecX upper;

  // Rows touching each robot, in increasing row order: entries
  // [incidence_start[k], incidence_start[k+1]) of `incidence`. A negative
  // entry -(r+1) marks robot k as the j side of row r.
  std::vector<int> incidence_start;
  std::vector<int> incidence;

  /// Rebuilds the incidence lists; call after editing rows by hand.
  void finalize();

  int num_robots() const { return static_cast<int>(jac.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  /// Throws std::invalid_argument on inconsistent dimensions or bounds.
  void validate() const;

  VecX apply_b(const VecX& udot) const;
  VecX apply_bt(const VecX& eta) const;
  double objective(const VecX& udot) const;
  /// Largest violation of B udot <= B_right (<= 0 when feasible).
  double max_violation(const VecX& udot) const;

  /// Dense copies, for tests and the reference solver.
  Eigen::MatrixXd dense_a() const;
  Eigen::MatrixXd dense_b() const;
  VecX dense_b_right() const;
};

/// Stacks Jacobians, targets and rows into a QpProblem. Row keys must be
/// strictly increasing (pair order); rows may only reference robots
/// 0..N-1 (obstacle partners are flagged on the row).
QpProblem assemble_qp(std::span<const Mat2> jacobians, std::span<const Vec2> targets,
                      std::vector<ConstraintRow> rows,
                      std::vector<std::int64_t> row_keys,
                      std::span<const Vec2> lower, std::span<const Vec2> upper);

struct SolverState {
  VecX udot;
  VecX eta;

  static SolverState zeros(const QpProblem& qp);
};

/// Multipliers of pairs present in both problems carry over; new pairs
/// start at zero and departed pairs are dropped.
VecX carry_multipliers(std::span<const std::int64_t> prev_keys, const VecX& prev_eta,
                       std::span<const std::int64_t> next_keys);

VecX projection_box(const VecX& x, const VecX& lo, const VecX& hi);

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int pair_index)
      : std::runtime_error(what), pair_index(pair_index) {}
  int pair_index;  // -1 when not tied to a row
};

/// One forward-Euler step of
///   eps * d(udot)/dt = -udot + phi(udot - 2 A^T (A udot - dzr) - B^T eta)
///   eps * d(eta)/dt  = max(0, B udot - B_right + eta) - eta
/// Data-parallel over robots and rows (OpenMP); reductions run in a fixed
/// order so results do not depend on the thread count.
SolverState ode_step(const SolverState& s, const QpProblem& qp, double eps, double dt);

/// Single-threaded reference implementation of ode_step, kept for testing
/// and benchmarking the parallel kernel.
SolverState ode_step_serial(const SolverState& s, const QpProblem& qp, double eps,
                            double dt);

struct SolveResult {
  SolverState state;
  double residual = 0.0;  // ||chi_{k+1} - chi_k||_inf of the last iteration
  int iterations = 0;
};

/// Repeats ode_step up to max_inner times, stopping early once the
/// iterate change drops below tol. Throws SolverError on divergence.
SolveResult solve_step(const SolverState& s, const QpProblem& qp, double eps, double dt,
                       int max_inner, double tol);

/// Minimum problem size at which ode_step switches to its threaded path.
inline constexpr int kParallelThreshold = 256;

}  // namespace soatt
