#pragma once

#include <Eigen/Dense>

namespace krongp {

/// Correlation Cholesky factor from canonical partial correlations.
/// z has m(m-1)/2 entries, row-major over the strict lower triangle.
/// Returns lower-triangular L with unit row norms and positive diagonal;
/// adds the log-Jacobian of the transform to `log_jac`.
Eigen::MatrixXd corr_chol_constrain(const Eigen::VectorXd& z, int m, double& log_jac);

/// Inverse transform, for constructing states in tests.
Eigen::VectorXd corr_chol_unconstrain(const Eigen::MatrixXd& L);

/// Reverse pass of corr_chol_constrain: given the adjoint of L (full lower
/// triangle including the diagonal) plus an implicit unit adjoint on the
/// log-Jacobian term, returns the adjoint of z.
Eigen::VectorXd corr_chol_adjoint(const Eigen::VectorXd& z, int m, const Eigen::MatrixXd& Lbar);

}  // namespace krongp
