#pragma once

#include <vector>

#include <Eigen/Dense>

namespace krongp {

enum class KernelKind { SE_ARD, Linear };

struct KernelSpec {
  KernelKind kind = KernelKind::SE_ARD;
  std::vector<int> active_columns;   // columns of the component covariate block
  bool add_random_effect = false;    // individual component only

  int n_lengthscales() const {
    return kind == KernelKind::SE_ARD ? static_cast<int>(active_columns.size()) : 0;
  }
};

/// Output scale/correlation pair: the latent output factor is diag(alpha) L.
struct OutputCovParams {
  Eigen::VectorXd alpha;  // positive scales, one per output
  Eigen::MatrixXd L;      // lower-triangular correlation Cholesky, unit row norms
};

using NoiseCovParams = OutputCovParams;

/// SE-ARD kernel, K[i,j] = exp(-0.5 sum_d (x_id - x_jd)^2 / rho_d^2).
Eigen::MatrixXd se_ard(const Eigen::MatrixXd& x, const Eigen::VectorXd& rho);

/// Linear kernel with intercept, K = 1 1^T + X X^T.
Eigen::MatrixXd linear_kernel(const Eigen::MatrixXd& x);

/// Component covariance: base kernel on the active columns, plus
/// sigma2_re * I when the spec carries the random effect.  Jitter is the
/// caller's concern (added before Cholesky).
Eigen::MatrixXd component_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& rho, double sigma2_re);

/// diag(alpha) L; the Gram of the result is the output covariance.
Eigen::MatrixXd output_cov_factor(const OutputCovParams& p);

}  // namespace krongp
