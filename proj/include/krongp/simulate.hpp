#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "krongp/grid.hpp"

namespace krongp {

struct SimConfig {
  int n1 = 20, n2 = 7, n3 = 3;
  double noise_sd = 0.1;
  double covariate_lo = -5.0, covariate_hi = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// f1 = exp(.15 x1) - .6 x2^2 + sin(3 x3);  f2 = -exp(-.15 x1) + |3 x2| - cos(3 x3);
/// f3 = -f1;  f4 = f2.
Eigen::Vector4d latent_functions(double x1, double x2, double x3);

struct SimResult {
  GridData data;
  Eigen::MatrixXd truth;  // noiseless latents, 4 x (n1 n2 n3)
};

/// Outputs 1-2: noisy f1, f2 (Gaussian).  Outputs 3-4: 1[f3 + eps > 0],
/// 1[f4 + eps > 0] (Bernoulli), i.e. Phi(f + eps) rounded at 0.5.
SimResult simulate_dataset(const SimConfig& cfg);

/// Write dataset CSV + schema sidecar via the standard long format.
void write_simulated(const SimResult& sim, const std::string& csv_path,
                     const std::string& schema_path);

}  // namespace krongp
