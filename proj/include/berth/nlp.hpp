// Nonlinear program handed from the transcription to the solver:
//   min f(x)  s.t.  c_eq(x) = 0,  c_in(x) >= 0,  lower <= x <= upper
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace berth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct RowGroup {
  std::string name;
  int begin = 0;
  int count = 0;
};

struct NlpProblem {
  int n = 0;
  int m_eq = 0;
  int m_in = 0;

  std::function<double(const VectorXd&)> objective;
  std::function<VectorXd(const VectorXd&)> equalities;
  std::function<VectorXd(const VectorXd&)> inequalities;

  /// Optional constraint Jacobians. When empty the solver differences the
  /// evaluators itself.
  std::function<void(const VectorXd&, MatrixXd& jac_eq, MatrixXd& jac_in)> jacobian;

  /// Optional objective gradient; differenced when empty.
  std::function<VectorXd(const VectorXd&)> gradient;

  VectorXd lower;
  VectorXd upper;
  /// Typical magnitude of each variable; the solver works in x / x_scale.
  VectorXd x_scale;

  std::vector<RowGroup> eq_groups;
  std::vector<RowGroup> in_groups;

  /// Name and local index of row `row` in the given group list, e.g.
  /// "defect[12]". Returns "?" for rows outside every group.
  static std::string describe_row(const std::vector<RowGroup>& groups, int row);

  /// Throws std::invalid_argument if dimensions or metadata are inconsistent.
  void check() const;
};

}  // namespace berth
