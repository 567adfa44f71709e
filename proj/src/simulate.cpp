#include "krongp/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace krongp {

void SimConfig::validate() const {
  if (n1 < 1 || n2 < 1 || n3 < 1) throw std::invalid_argument("grid sizes must be >= 1");
  if (noise_sd < 0.0) throw std::invalid_argument("noise_sd must be >= 0");
  if (!(covariate_lo < covariate_hi)) throw std::invalid_argument("empty covariate range");
}

Eigen::Vector4d latent_functions(double x1, double x2, double x3) {
  const double f1 = std::exp(0.15 * x1) - 0.6 * x2 * x2 + std::sin(3.0 * x3);
  const double f2 = -std::exp(-0.15 * x1) + std::abs(3.0 * x2) - std::cos(3.0 * x3);
  return {f1, f2, -f1, f2};
}

SimResult simulate_dataset(const SimConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(cfg.covariate_lo, cfg.covariate_hi);
  std::normal_distribution<double> noise(0.0, 1.0);

  SimResult sim;
  GridDesign& d = sim.data.design;
  const int sizes[3] = {cfg.n1, cfg.n2, cfg.n3};
  for (int k = 0; k < 3; ++k) {
    ComponentBlock& block = d.components[k];
    block.unique_rows.resize(sizes[k], 1);
    for (int i = 0; i < sizes[k]; ++i) block.unique_rows(i, 0) = unif(rng);
    block.column_names = {"x" + std::to_string(k + 1)};
    block.kernel.kind = KernelKind::SE_ARD;
    block.kernel.active_columns = {0};
  }
  d.n_outputs = 4;
  d.output_families = {Family::Gaussian, Family::Gaussian, Family::Bernoulli, Family::Bernoulli};
  d.output_names = {"y1", "y2", "z1", "z2"};
  d.validate();

  const Eigen::Index cells = d.cells();
  sim.truth.resize(4, cells);
  OutcomeMatrix& y = sim.data.outcomes;
  y.values.resize(4, cells);
  y.observed.setConstant(4, cells, true);

  for (int i3 = 0; i3 < cfg.n3; ++i3)
    for (int i2 = 0; i2 < cfg.n2; ++i2)
      for (int i1 = 0; i1 < cfg.n1; ++i1) {
        const Eigen::Index cell = (static_cast<Eigen::Index>(i3) * cfg.n2 + i2) * cfg.n1 + i1;
        const Eigen::Vector4d f = latent_functions(d.components[0].unique_rows(i1, 0),
                                                   d.components[1].unique_rows(i2, 0),
                                                   d.components[2].unique_rows(i3, 0));
        sim.truth.col(cell) = f;
        for (int o = 0; o < 4; ++o) {
          const double noisy = f(o) + cfg.noise_sd * noise(rng);
          y.values(o, cell) = o < 2 ? noisy : (noisy > 0.0 ? 1.0 : 0.0);
        }
      }
  return sim;
}

void write_simulated(const SimResult& sim, const std::string& csv_path,
                     const std::string& schema_path) {
  write_long_csv(sim.data, csv_path, schema_path);
}

}  // namespace krongp
