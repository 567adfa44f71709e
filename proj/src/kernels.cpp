#include "krongp/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace krongp {

Eigen::MatrixXd se_ard(const Eigen::MatrixXd& x, const Eigen::VectorXd& rho) {
  if (rho.size() != x.cols()) throw std::invalid_argument("se_ard: lengthscale count mismatch");
  if ((rho.array() <= 0.0).any()) throw std::invalid_argument("se_ard: nonpositive lengthscale");
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      double q = 0.0;
      for (Eigen::Index d = 0; d < x.cols(); ++d) {
        const double diff = (x(i, d) - x(j, d)) / rho(d);
        q += diff * diff;
      }
      k(i, j) = k(j, i) = std::exp(-0.5 * q);
    }
  }
  return k;
}

Eigen::MatrixXd linear_kernel(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  return Eigen::MatrixXd::Ones(n, n) + x * x.transpose();
}

Eigen::MatrixXd component_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& rho, double sigma2_re) {
  Eigen::MatrixXd cols(x.rows(), spec.active_columns.size());
  for (std::size_t c = 0; c < spec.active_columns.size(); ++c)
    cols.col(c) = x.col(spec.active_columns[c]);
  Eigen::MatrixXd k;
  switch (spec.kind) {
    case KernelKind::SE_ARD:
      if (cols.cols() == 0) throw std::invalid_argument("component_matrix: SE_ARD needs columns");
      k = se_ard(cols, rho);
      break;
    case KernelKind::Linear:
      k = linear_kernel(cols);
      break;
  }
  if (spec.add_random_effect) k.diagonal().array() += sigma2_re;
  return k;
}

Eigen::MatrixXd output_cov_factor(const OutputCovParams& p) {
  if (p.alpha.size() != p.L.rows()) throw std::invalid_argument("output_cov_factor: size mismatch");
  return p.alpha.asDiagonal() * Eigen::MatrixXd(p.L.triangularView<Eigen::Lower>());
}

}  // namespace krongp
