#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "krongp/grid.hpp"
#include "krongp/kron.hpp"

namespace krongp {

enum class ModelKind { GPf, GPm, LINf, LINm };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::GPf;
  int individual_component = 3;  // 1-based; receives the random-effect diagonal
  double lkj_shape = 3.0;
  double jitter = 1e-8;

  bool random_effect() const { return kind == ModelKind::GPm || kind == ModelKind::LINm; }
  bool all_linear() const { return kind == ModelKind::LINf || kind == ModelKind::LINm; }
};

/// Constrained parameter blocks.
struct ParameterState {
  std::array<Eigen::VectorXd, 3> rho;  // lengthscales, empty for linear components
  Eigen::VectorXd alpha;               // output scales, length N4
  Eigen::VectorXd alpha_n;             // noise scales, length n_g
  Eigen::MatrixXd L;                   // output correlation Cholesky, N4 x N4
  Eigen::MatrixXd L_n;                 // noise correlation Cholesky, n_g x n_g
  double sigma2_re = 0.0;              // random-effect variance (GP.m / LIN.m)
  Eigen::VectorXd eta;                 // standard-normal latent, length N4 N1 N2 N3
  Eigen::VectorXd y_miss_gauss;        // one per unobserved Gaussian cell
  Eigen::VectorXd y_miss_bern;         // in (0,1), one per unobserved Bernoulli cell
};

/// Joint unconstrained log-density of the hierarchical model, with exact
/// gradient.  Pure and reentrant: safe to call concurrently from chains.
class Posterior {
 public:
  Posterior(GridDesign design, OutcomeMatrix outcomes, ModelConfig cfg);

  Eigen::Index dim() const { return dim_; }
  const GridDesign& design() const { return design_; }
  const ModelConfig& config() const { return cfg_; }

  /// Log prior + likelihood in unconstrained coordinates (Jacobians
  /// included).  Fills `grad` when non-null.  Non-finite inputs yield
  /// -inf rather than throwing.
  double log_density(const Eigen::VectorXd& flat, Eigen::VectorXd* grad) const;

  double log_prior(const Eigen::VectorXd& flat) const;
  double log_likelihood(const Eigen::VectorXd& flat) const;

  ParameterState constrain(const Eigen::VectorXd& flat) const;
  Eigen::VectorXd unconstrain(const ParameterState& state) const;

  /// Latent f as an N4 x (N1 N2 N3) matrix under the normative layout.
  Eigen::MatrixXd build_latent_f(const Eigen::VectorXd& flat) const;

  /// Dense K_out (x) K3 (x) K2 (x) K1; test oracle, capped at 10,000.
  Eigen::MatrixXd dense_latent_covariance(const Eigen::VectorXd& flat,
                                          bool include_jitter = true) const;

  /// Kernel spec actually used for component k (config may force linear).
  const KernelSpec& component_spec(int k) const { return specs_[k]; }

  /// Names of the reported constrained hyperparameters, in summary-table
  /// order: rho, alpha, alpha_n, L_n, L, sigma2_re.
  const std::vector<std::string>& hyper_names() const { return hyper_names_; }
  Eigen::VectorXd hyper_values(const ParameterState& state) const;

  // Flat-vector block offsets (unconstrained layout).
  Eigen::Index rho_offset(int k) const { return off_rho_[k]; }
  Eigen::Index eta_offset() const { return off_eta_; }
  int n_missing_gauss() const { return static_cast<int>(miss_gauss_.size()); }
  int n_missing_bern() const { return static_cast<int>(miss_bern_.size()); }

 private:
  double eval(const Eigen::VectorXd& flat, Eigen::VectorXd* grad, double* prior_out,
              double* lik_out) const;

  GridDesign design_;
  OutcomeMatrix outcomes_;
  ModelConfig cfg_;
  std::array<KernelSpec, 3> specs_;
  std::array<Eigen::MatrixXd, 3> linear_base_;  // cached Gram for linear components

  int n_gauss_ = 0, n_bern_ = 0;
  std::vector<std::pair<int, Eigen::Index>> miss_gauss_;  // (output, cell)
  std::vector<std::pair<int, Eigen::Index>> miss_bern_;
  Eigen::MatrixXi bern_param_;  // relaxed-parameter index per (output, cell), -1 if observed

  Eigen::Index off_rho_[3] = {0, 0, 0}, off_alpha_ = 0, off_alpha_n_ = 0;
  Eigen::Index off_z_L_ = 0, off_z_Ln_ = 0, off_re_ = 0, off_eta_ = 0;
  Eigen::Index off_ymg_ = 0, off_ymb_ = 0, dim_ = 0;

  std::vector<std::string> hyper_names_;
};

}  // namespace krongp
