#pragma once

#include <Eigen/Dense>

namespace lsf {

/// min 0.5 x'Hx + g'x  s.t.  A_eq x = b_eq,  A_in x >= b_in,  lb <= x <= ub.
///
/// H must be symmetric positive definite. Empty matrices mean "no such
/// constraints"; empty or infinite bound entries are ignored.
struct DenseQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
};

enum class QpStatus { Optimal, Infeasible, NotPositiveDefinite, IterationLimit };

const char* to_string(QpStatus s);

struct QpSolution {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  int active_constraints = 0;
};

/// Goldfarb-Idnani dual active-set method. The unconstrained minimizer is the
/// starting point, so no feasible initial guess is needed and infeasibility is
/// detected rather than assumed away.
QpSolution solve_dense_qp(const DenseQp& qp, int max_iterations = 0);

}  // namespace lsf
