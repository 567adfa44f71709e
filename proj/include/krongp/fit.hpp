#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "krongp/diagnostics.hpp"
#include "krongp/grid.hpp"
#include "krongp/model.hpp"
#include "krongp/sampler.hpp"

namespace krongp {

/// A completed MCMC fit.  Hyperparameter draws are on the standardized
/// fitting scale; `standardization` maps them (and f) back to the data
/// scale.  The latent posterior mean `f_mean` is already back-transformed
/// for Gaussian outputs; Bernoulli rows stay on the probit scale.
struct FitResult {
  std::vector<std::string> hyper_names;
  std::vector<Eigen::MatrixXd> hyper_draws;  // per chain, samples x n_hyper
  Eigen::MatrixXd f_mean;                    // N4 x cells, data scale
  std::vector<SummaryRow> summary;           // over hyper_draws
  NutsResult sampler_stats;
  StandardizationRecord standardization;
  ModelConfig model_config;
  SamplerSettings sampler_settings;

  double max_rhat() const;
};

/// Standardize, build the posterior, run NUTS, and collect constrained
/// hyperparameter draws plus the posterior-mean latent surface.
FitResult fit_model(const GridData& data, const ModelConfig& cfg,
                    const SamplerSettings& settings);

/// Persist a fit: chain_<c>.csv draw files, summary.csv, f_mean.csv and
/// manifest.json under `out_dir` (created if needed).
void write_fit_outputs(const FitResult& fit, const std::string& out_dir);

}  // namespace krongp
