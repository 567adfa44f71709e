#include "krongp/transforms.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace krongp {

Eigen::MatrixXd corr_chol_constrain(const Eigen::VectorXd& z, int m, double& log_jac) {
  if (z.size() != static_cast<Eigen::Index>(m) * (m - 1) / 2)
    throw std::invalid_argument("corr_chol_constrain: size mismatch");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  if (m == 0) return L;
  L(0, 0) = 1.0;
  Eigen::Index idx = 0;
  for (int i = 1; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < i; ++j, ++idx) {
      const double y = std::tanh(z(idx));
      const double w = std::sqrt(1.0 - s);
      L(i, j) = y * w;
      log_jac += std::log1p(-y * y) + 0.5 * std::log1p(-s);
      s += L(i, j) * L(i, j);
    }
    L(i, i) = std::sqrt(1.0 - s);
  }
  return L;
}

Eigen::VectorXd corr_chol_unconstrain(const Eigen::MatrixXd& L) {
  const int m = static_cast<int>(L.rows());
  Eigen::VectorXd z(static_cast<Eigen::Index>(m) * (m - 1) / 2);
  Eigen::Index idx = 0;
  for (int i = 1; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < i; ++j, ++idx) {
      const double y = L(i, j) / std::sqrt(1.0 - s);
      z(idx) = std::atanh(y);
      s += L(i, j) * L(i, j);
    }
  }
  return z;
}

Eigen::VectorXd corr_chol_adjoint(const Eigen::VectorXd& z, int m, const Eigen::MatrixXd& Lbar) {
  Eigen::VectorXd zbar = Eigen::VectorXd::Zero(z.size());
  Eigen::Index row_start = 0;
  for (int i = 1; i < m; ++i) {
    // Replay the row forward pass, storing s before each column.
    std::vector<double> s_before(i), y(i), l(i);
    double s = 0.0;
    for (int j = 0; j < i; ++j) {
      s_before[j] = s;
      y[j] = std::tanh(z(row_start + j));
      l[j] = y[j] * std::sqrt(1.0 - s);
      s += l[j] * l[j];
    }
    // sbar tracks the adjoint of s *after* column j.
    double sbar = -0.5 * Lbar(i, i) / std::sqrt(1.0 - s);
    for (int j = i - 1; j >= 0; --j) {
      const double w = std::sqrt(1.0 - s_before[j]);
      const double lbar = Lbar(i, j) + 2.0 * l[j] * sbar;
      // Jacobian terms log(1-y^2) + 0.5 log(1-s_before).
      double ybar = lbar * w - 2.0 * y[j] / (1.0 - y[j] * y[j]);
      double sb = sbar - 0.5 * lbar * y[j] / w - 0.5 / (1.0 - s_before[j]);
      zbar(row_start + j) = ybar * (1.0 - y[j] * y[j]);
      sbar = sb;
    }
    row_start += i;
  }
  return zbar;
}

}  // namespace krongp
