#pragma once

#include <Eigen/Dense>

namespace mavswarm {

/// Dense convex QP
///
///   min  1/2 z' H z + g' z
///   s.t. A_eq z  = b_eq
///        A_in z <= b_in
///        lower <= z <= upper      (entries may be +-infinity)
///
/// H must be symmetric positive definite.
struct DenseQp {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int size() const { return static_cast<int>(gradient.size()); }
  /// Resizes everything for `n` variables, no constraints, unbounded.
  void resize(int n);
};

enum class QpStatus { kOptimal, kIterationLimit, kInfeasible, kNotPositiveDefinite };

/// Multipliers follow the Lagrangian
///   L = f + y'(A_eq z - b_eq) + mu'(A_in z - b_in) + nu_u'(z - upper) + nu_l'(lower - z)
/// so mu, nu_u, nu_l >= 0 at an optimum.
struct QpResult {
  QpStatus status = QpStatus::kInfeasible;
  Eigen::VectorXd z;
  Eigen::VectorXd eq_dual;
  Eigen::VectorXd ineq_dual;
  Eigen::VectorXd lower_dual;
  Eigen::VectorXd upper_dual;
  int iterations = 0;

  bool ok() const { return status == QpStatus::kOptimal; }
};

struct QpSettings {
  int max_iterations = 1000;
  double feasibility_tol = 1e-10;
};

/// Dual active-set solver working on the Cholesky factor of H with
/// Givens-updated factorizations of the active constraints.
QpResult solve_qp(const DenseQp& qp, const QpSettings& settings = {});

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;            // most negative inequality multiplier (as positive number)
  double complementarity = 0.0; // max |multiplier * constraint|

  double max() const;
};

KktResidual kkt_residual(const DenseQp& qp, const QpResult& result);

}  // namespace mavswarm
