#pragma once

#include <vector>

#include <Eigen/Dense>

namespace krongp {

/// Ordered factors of a Kronecker product, slowest-varying first.
/// For the latent covariance this is [A_out, K3, K2, K1]: the flat layout
/// has the component-1 index varying fastest and the output index slowest.
struct KroneckerFactors {
  std::vector<Eigen::MatrixXd> factors;

  std::vector<Eigen::Index> dims() const;
  Eigen::Index product_dim() const;
};

/// y = (f0 x f1 x ... x fk) v without materialising the dense product.
/// Sequential mode contractions, slowest factor first.
Eigen::VectorXd kron_matvec(const KroneckerFactors& factors, const Eigen::VectorXd& v);

/// Same as kron_matvec with the factor in slot `skip` replaced by identity.
Eigen::VectorXd kron_matvec_skip(const KroneckerFactors& factors, const Eigen::VectorXd& v,
                                 std::size_t skip);

/// Contract one tensor mode with a matrix: out[..,j,..] = sum_i A[j,i] v[..,i,..].
/// `dims` lists the tensor extents slowest-first, `mode` indexes into it.
Eigen::VectorXd mode_multiply(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& dims,
                              std::size_t mode, const Eigen::MatrixXd& a);

/// Adjoint of kron_matvec with respect to the factor in slot `mode`:
/// given gbar = d(loss)/d(output) and z = the input with all *other*
/// factors already applied, returns d(loss)/d(factor).
Eigen::MatrixXd mode_outer(const Eigen::VectorXd& gbar, const Eigen::VectorXd& z,
                           const std::vector<Eigen::Index>& dims, std::size_t mode);

/// Dense Kronecker product, test oracle only.  Throws if the product
/// dimension exceeds `cap`.
Eigen::MatrixXd dense_kron(const KroneckerFactors& factors, Eigen::Index cap = 10000);

/// Cholesky with jitter escalation: returns lower L with L L^T = m + jitter I.
/// On failure the jitter is escalated x10 up to 1e-4, then throws.
Eigen::MatrixXd chol_factor(const Eigen::MatrixXd& m, double jitter);

/// log det of the Kronecker product of SPD factors,
/// sum_i (N / N_i) log det f_i.
double kron_logdet(const KroneckerFactors& factors);

/// Reverse-mode adjoint of the Cholesky factorisation: given lower L with
/// L L^T = K and Lbar = d(loss)/dL, returns the symmetric d(loss)/dK.
Eigen::MatrixXd chol_adjoint(const Eigen::MatrixXd& L, const Eigen::MatrixXd& Lbar);

}  // namespace krongp
