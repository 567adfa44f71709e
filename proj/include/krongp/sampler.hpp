#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace krongp {

/// Log density with gradient; must be pure and callable from all chains
/// concurrently.  Returns -inf for out-of-support points.
using LogDensityGrad = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct SamplerSettings {
  int chains = 4;
  int warmup = 500;
  int samples = 500;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::uint64_t seed = 1;
  double init_scale = 2.0;  // uniform(-scale, scale) on unconstrained coords
  int threads = 0;          // 0 = hardware concurrency

  void validate() const;
};

/// Per-draw callback: (chain, draw index within chain, unconstrained draw).
/// Called only for post-warmup draws, in draw order within each chain.
using DrawSink = std::function<void(int, int, const Eigen::VectorXd&)>;

struct ChainStats {
  int divergences = 0;
  double step_size = 0.0;
  std::vector<int> tree_depths;
};

struct NutsResult {
  std::vector<ChainStats> chains;
  int total_divergences() const {
    int t = 0;
    for (const auto& c : chains) t += c.divergences;
    return t;
  }
};

/// Multinomial NUTS with dual-averaging step-size adaptation and a
/// diagonal mass matrix estimated during warmup.  Deterministic given the
/// seed: chain c uses an independent RNG seeded seed + c, and results are
/// written per chain regardless of thread scheduling.
NutsResult nuts_sample(const LogDensityGrad& target, Eigen::Index dim,
                       const SamplerSettings& settings, const DrawSink& sink);

/// Convenience wrapper collecting draws into per-chain matrices
/// (samples x dim).
NutsResult nuts_sample_collect(const LogDensityGrad& target, Eigen::Index dim,
                               const SamplerSettings& settings,
                               std::vector<Eigen::MatrixXd>& draws);

/// One leapfrog step; exposed for the energy-conservation tests.
void leapfrog(const LogDensityGrad& target, const Eigen::VectorXd& inv_mass, double eps,
              Eigen::VectorXd& theta, Eigen::VectorXd& momentum, Eigen::VectorXd& grad,
              double& logp);

}  // namespace krongp
