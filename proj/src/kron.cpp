#include "krongp/kron.hpp"

#include <stdexcept>

namespace krongp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;

void check_square_finite(const std::vector<Eigen::MatrixXd>& factors) {
  if (factors.empty()) throw std::invalid_argument("KroneckerFactors: no factors");
  for (const auto& f : factors) {
    if (f.rows() != f.cols()) throw std::invalid_argument("KroneckerFactors: factor not square");
    if (!f.allFinite()) throw std::invalid_argument("KroneckerFactors: non-finite factor");
  }
}

}  // namespace

std::vector<Eigen::Index> KroneckerFactors::dims() const {
  std::vector<Eigen::Index> d;
  d.reserve(factors.size());
  for (const auto& f : factors) d.push_back(f.rows());
  return d;
}

Eigen::Index KroneckerFactors::product_dim() const {
  Eigen::Index n = 1;
  for (const auto& f : factors) n *= f.rows();
  return n;
}

Eigen::VectorXd mode_multiply(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& dims,
                              std::size_t mode, const Eigen::MatrixXd& a) {
  Eigen::Index left = 1, right = 1;
  for (std::size_t i = 0; i < mode; ++i) left *= dims[i];
  for (std::size_t i = mode + 1; i < dims.size(); ++i) right *= dims[i];
  const Eigen::Index mid = dims[mode];
  if (v.size() != left * mid * right) throw std::invalid_argument("mode_multiply: size mismatch");
  if (a.cols() != mid) throw std::invalid_argument("mode_multiply: factor size mismatch");

  Eigen::VectorXd out(left * a.rows() * right);
  for (Eigen::Index l = 0; l < left; ++l) {
    ConstRowMap block(v.data() + l * mid * right, mid, right);
    RowMap oblock(out.data() + l * a.rows() * right, a.rows(), right);
    oblock.noalias() = a * block;
  }
  return out;
}

Eigen::VectorXd kron_matvec(const KroneckerFactors& factors, const Eigen::VectorXd& v) {
  check_square_finite(factors.factors);
  if (v.size() != factors.product_dim()) throw std::invalid_argument("kron_matvec: dimension mismatch");
  const auto d = factors.dims();
  Eigen::VectorXd w = v;
  for (std::size_t k = 0; k < factors.factors.size(); ++k) {
    w = mode_multiply(w, d, k, factors.factors[k]);
  }
  return w;
}

Eigen::VectorXd kron_matvec_skip(const KroneckerFactors& factors, const Eigen::VectorXd& v,
                                 std::size_t skip) {
  const auto d = factors.dims();
  Eigen::VectorXd w = v;
  for (std::size_t k = 0; k < factors.factors.size(); ++k) {
    if (k == skip) continue;
    w = mode_multiply(w, d, k, factors.factors[k]);
  }
  return w;
}

Eigen::MatrixXd mode_outer(const Eigen::VectorXd& gbar, const Eigen::VectorXd& z,
                           const std::vector<Eigen::Index>& dims, std::size_t mode) {
  Eigen::Index left = 1, right = 1;
  for (std::size_t i = 0; i < mode; ++i) left *= dims[i];
  for (std::size_t i = mode + 1; i < dims.size(); ++i) right *= dims[i];
  const Eigen::Index mid = dims[mode];
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(mid, mid);
  for (Eigen::Index l = 0; l < left; ++l) {
    ConstRowMap gblock(gbar.data() + l * mid * right, mid, right);
    ConstRowMap zblock(z.data() + l * mid * right, mid, right);
    acc.noalias() += gblock * zblock.transpose();
  }
  return acc;
}

Eigen::MatrixXd dense_kron(const KroneckerFactors& factors, Eigen::Index cap) {
  check_square_finite(factors.factors);
  if (factors.product_dim() > cap) throw std::invalid_argument("dense_kron: cap exceeded");
  Eigen::MatrixXd out = factors.factors.front();
  for (std::size_t k = 1; k < factors.factors.size(); ++k) {
    const Eigen::MatrixXd& b = factors.factors[k];
    Eigen::MatrixXd next(out.rows() * b.rows(), out.cols() * b.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = out(i, j) * b;
    out = std::move(next);
  }
  return out;
}

Eigen::MatrixXd chol_factor(const Eigen::MatrixXd& m, double jitter) {
  if (m.rows() != m.cols()) throw std::invalid_argument("chol_factor: not square");
  if (!m.isApprox(m.transpose(), 1e-8)) throw std::invalid_argument("chol_factor: not symmetric");
  double j = jitter;
  while (true) {
    Eigen::MatrixXd k = m;
    if (j > 0.0) k.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    if (j == 0.0) {
      j = 1e-10;
    } else {
      j *= 10.0;
    }
    if (j > 1e-4) throw std::runtime_error("chol_factor: not positive-definite after max jitter");
  }
}

double kron_logdet(const KroneckerFactors& factors) {
  check_square_finite(factors.factors);
  const Eigen::Index n = factors.product_dim();
  double total = 0.0;
  for (const auto& f : factors.factors) {
    Eigen::LLT<Eigen::MatrixXd> llt(f);
    if (llt.info() != Eigen::Success) throw std::runtime_error("kron_logdet: non-SPD factor");
    const double ld = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    total += static_cast<double>(n / f.rows()) * ld;
  }
  return total;
}

Eigen::MatrixXd chol_adjoint(const Eigen::MatrixXd& L, const Eigen::MatrixXd& Lbar) {
  const Eigen::Index n = L.rows();
  // P = Phi(L^T Lbar): lower triangle, diagonal halved.
  Eigen::MatrixXd p = (L.transpose() * Lbar).triangularView<Eigen::Lower>();
  p.diagonal() *= 0.5;
  // Kbar = L^-T P L^-1, then symmetrised.
  Eigen::MatrixXd t = L.triangularView<Eigen::Lower>().transpose().solve(p);
  Eigen::MatrixXd kbar =
      L.triangularView<Eigen::Lower>().transpose().solve(Eigen::MatrixXd(t.transpose())).transpose();
  return 0.5 * (kbar + kbar.transpose());
}

}  // namespace krongp
