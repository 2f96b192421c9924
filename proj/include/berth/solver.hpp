// Quasi-Newton SQP for smooth NLPs with bounds, equalities and inequalities.
//
// Subproblems are solved with a dense dual active-set method (Goldfarb and
// Idnani). Globalization uses an l1 exact penalty merit function with
// backtracking; derivatives come from finite differences unless the problem
// supplies a Jacobian.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "berth/nlp.hpp"

namespace berth {

// ---------------------------------------------------------------------------
// QP subproblem
// ---------------------------------------------------------------------------

/// min 1/2 d'Hd + g'd  s.t.  A_eq d = b_eq,  A_in d >= b_in,  lower <= d <= upper.
/// Empty matrices / vectors mean "no such constraints"; infinite bounds are
/// ignored.
struct QpProblem {
  MatrixXd H;
  VectorXd g;
  MatrixXd A_eq;
  VectorXd b_eq;
  MatrixXd A_in;
  VectorXd b_in;
  VectorXd lower;
  VectorXd upper;
};

enum class QpStatus { Optimal, Elastic, Infeasible, IterationLimit };

const char* to_string(QpStatus s);

/// Multipliers satisfy H d + g = A_eq' eq + A_in' in + lower_bound - upper_bound
/// with in, lower_bound, upper_bound >= 0.
struct QpResult {
  QpStatus status = QpStatus::Optimal;
  VectorXd d;
  VectorXd eq;
  VectorXd in;
  VectorXd lower_bound;
  VectorXd upper_bound;
  /// Elastic relaxation in [0, 1]: the linearized constraints are met only
  /// to a fraction (1 - slack) of their current residual. Zero when the
  /// subproblem was consistent.
  double slack = 0.0;
  int iterations = 0;
};

/// Throws std::invalid_argument for inconsistent dimensions or an H that is
/// not positive definite.
QpResult qp_subproblem(const QpProblem& qp, int max_iterations = 5000);

/// Solves the QP once as stated; reports Infeasible instead of relaxing.
QpResult qp_solve_strict(const QpProblem& qp, int max_iterations = 5000);

// ---------------------------------------------------------------------------
// SQP
// ---------------------------------------------------------------------------

enum class FdScheme { Forward, Central };

struct SolverOptions {
  int max_iterations = 400;
  double tol_con = 1e-6;
  double tol_opt = 1e-5;
  double tol_step = 1e-10;
  FdScheme fd_scheme = FdScheme::Forward;
  /// Relative finite-difference step; 0 selects sqrt(eps) for forward and
  /// cbrt(eps) for central differences. Step = fd_step * (1 + |x_i|).
  double fd_step = 0.0;
  double armijo = 1e-4;
  int max_backtracks = 40;
  /// Lower bound on every merit penalty weight.
  double penalty_floor = 1.0;
  int qp_max_iterations = 5000;
  /// A feasible iterate whose objective moved by less than tol_opt (relative)
  /// for this many accepted steps is reported as feasible-stalled.
  int stall_iterations = 8;
  bool record_trace = false;

  void validate() const;
};

enum class SolverStatus { FeasibleOptimal, FeasibleStalled, Infeasible, MaxIterations };

const char* to_string(SolverStatus s);
inline bool is_feasible(SolverStatus s) {
  return s == SolverStatus::FeasibleOptimal || s == SolverStatus::FeasibleStalled;
}

struct Multipliers {
  VectorXd eq;
  VectorXd in;
  VectorXd lower;
  VectorXd upper;
};

struct TraceRecord {
  int iteration = 0;
  double objective = 0.0;
  double violation = 0.0;
  double kkt = 0.0;
  double merit = 0.0;
  double step_norm = 0.0;
  double alpha = 0.0;
  double qp_slack = 0.0;
  int qp_iterations = 0;
};

/// One JSON object per line.
void write_trace(std::ostream& os, const std::vector<TraceRecord>& trace);

struct SolverResult {
  SolverStatus status = SolverStatus::Infeasible;
  VectorXd x;
  int iterations = 0;
  double max_violation = 0.0;
  double objective = 0.0;
  double kkt = 0.0;
  double wall_time = 0.0;  ///< [s]
  Multipliers multipliers;
  std::string message;
  std::vector<TraceRecord> trace;
};

/// Largest equality |c|, inequality max(0, -c) and bound violation.
double max_violation(const NlpProblem& nlp, const VectorXd& x);

/// max of the infinity norms of the Lagrangian gradient, complementarity
/// products and constraint violation. Gradients by forward differences unless
/// the problem provides a Jacobian.
double kkt_residual(const NlpProblem& nlp, const VectorXd& x, const Multipliers& m);

SolverResult solve(const NlpProblem& nlp, const VectorXd& x_init, const SolverOptions& options = {});

}  // namespace berth
