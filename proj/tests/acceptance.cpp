// Acceptance harness: one pass/fail line per criterion.  Run with a list
// of criterion numbers to execute a subset, e.g. `acceptance 1 4 8`.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "krongp/cli.hpp"
#include "krongp/evaluate.hpp"
#include "krongp/fit.hpp"
#include "krongp/mathutil.hpp"
#include "krongp/model.hpp"
#include "krongp/sampler.hpp"
#include "krongp/simulate.hpp"
#include "krongp/stats.hpp"

using namespace krongp;
namespace fs = std::filesystem;

namespace {

struct Reporter {
  int failures = 0;
  void result(int number, const std::string& name, bool pass, double seconds) {
    std::printf("criterion %2d [%s] %s (%.1f s)\n", number, pass ? "PASS" : "FAIL", name.c_str(),
                seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double ridge = 0.3) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  Eigen::MatrixXd m = a * a.transpose();
  m.diagonal().array() += ridge;
  return m;
}

// ---- criterion 1: Kronecker mat-vec vs dense oracle ----
bool criterion_kron() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> nf(3, 4), sz(1, 6);
  std::normal_distribution<double> normal;
  int done = 0;
  double worst = 0.0;
  while (done < 200) {
    KroneckerFactors f;
    Eigen::Index prod = 1;
    const int k = nf(rng);
    for (int i = 0; i < k; ++i) {
      const int n = sz(rng);
      if (prod * n > 1000) break;
      prod *= n;
      Eigen::MatrixXd a(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = normal(rng);
      f.factors.push_back(a);
    }
    if (static_cast<int>(f.factors.size()) < 3) continue;
    Eigen::VectorXd v(prod);
    for (Eigen::Index i = 0; i < prod; ++i) v(i) = normal(rng);
    const Eigen::VectorXd fast = kron_matvec(f, v);
    const Eigen::VectorXd slow = dense_kron(f) * v;
    const double denom = std::max(1e-300, slow.cwiseAbs().maxCoeff());
    worst = std::max(worst, (fast - slow).cwiseAbs().maxCoeff() / denom);
    ++done;
  }
  std::printf("  max relative error over 200 products: %.3g\n", worst);
  return worst <= 1e-10;
}

GridData gradient_check_grid() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  GridData data;
  const int sizes[3] = {2, 2, 1};
  for (int k = 0; k < 3; ++k) {
    auto& comp = data.design.components[k];
    comp.unique_rows.resize(sizes[k], 1);
    for (int i = 0; i < sizes[k]; ++i) comp.unique_rows(i, 0) = ux(rng) + 4.0 * i;
    comp.column_names = {"x" + std::to_string(k + 1)};
    comp.kernel.kind = KernelKind::SE_ARD;
    comp.kernel.active_columns = {0};
  }
  data.design.n_outputs = 4;
  data.design.output_families = {Family::Gaussian, Family::Gaussian, Family::Bernoulli,
                                 Family::Bernoulli};
  data.design.output_names = {"y1", "y2", "z1", "z2"};
  data.outcomes.values.resize(4, 4);
  data.outcomes.observed.setConstant(4, 4, true);
  std::normal_distribution<double> normal;
  for (int o = 0; o < 4; ++o)
    for (int m = 0; m < 4; ++m)
      data.outcomes.values(o, m) = o < 2 ? normal(rng) : static_cast<double>(rng() % 2);
  data.outcomes.observed(1, 2) = false;  // one missing Gaussian
  data.outcomes.observed(3, 0) = false;  // one missing Bernoulli
  return data;
}

// ---- criterion 2: analytic gradient vs central finite differences ----
bool criterion_gradient() {
  const GridData data = gradient_check_grid();
  ModelConfig cfg;
  cfg.kind = ModelKind::GPm;  // exercises the random-effect branch too
  const Posterior post(data.design, data.outcomes, cfg);
  std::mt19937_64 rng(203);
  std::normal_distribution<double> normal(0.0, 0.4);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd flat(post.dim());
    for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = normal(rng);
    Eigen::VectorXd grad(post.dim());
    if (!std::isfinite(post.log_density(flat, &grad))) return false;
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < post.dim(); ++i) {
      Eigen::VectorXd fp = flat, fm = flat;
      fp(i) += h;
      fm(i) -= h;
      const double fd =
          (post.log_density(fp, nullptr) - post.log_density(fm, nullptr)) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(fd), std::abs(grad(i))});
      worst = std::max(worst, std::abs(grad(i) - fd) / denom);
    }
  }
  std::printf("  max per-coordinate relative error over 20 points: %.3g\n", worst);
  return worst <= 1e-4;
}

// ---- criterion 3: all-linear model equals the feature-space linear model ----
bool criterion_linear_equivalence() {
  std::mt19937_64 rng(301);
  std::uniform_real_distribution<double> ux(-1.5, 1.5);
  std::normal_distribution<double> normal(0.0, 0.4);
  double worst_f = 0.0, worst_m = 0.0;

  for (int trial = 0; trial < 10; ++trial) {
    GridData data;
    const int sizes[3] = {2, 2, 2};
    for (int k = 0; k < 3; ++k) {
      auto& comp = data.design.components[k];
      comp.unique_rows.resize(sizes[k], 1);
      for (int i = 0; i < sizes[k]; ++i) comp.unique_rows(i, 0) = ux(rng) + 3.0 * i;
      comp.column_names = {"x" + std::to_string(k + 1)};
    }
    // one-hot covariates on the individual component (component 3)
    data.design.components[2].unique_rows = Eigen::MatrixXd::Identity(2, 2);
    data.design.components[2].column_names = {"g1", "g2"};
    data.design.n_outputs = 2;
    data.design.output_families = {Family::Gaussian, Family::Gaussian};
    data.design.output_names = {"y1", "y2"};
    data.outcomes.values = Eigen::MatrixXd::Zero(2, 8);
    data.outcomes.observed.setConstant(2, 8, true);

    for (ModelKind kind : {ModelKind::LINf, ModelKind::LINm}) {
      ModelConfig cfg;
      cfg.kind = kind;
      const Posterior post(data.design, data.outcomes, cfg);
      Eigen::VectorXd flat(post.dim());
      for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = normal(rng);
      const ParameterState s = post.constrain(flat);
      const Eigen::MatrixXd cov = post.dense_latent_covariance(flat, false);

      // feature-space covariance: per factor Phi_k D_k Phi_k^T with
      // Phi_k = [1 X_k]; the random effect inflates the block of
      // coefficients interacting with the individual component's
      // covariates by (1 + sigma2_re).
      KroneckerFactors feat;
      const Eigen::MatrixXd a =
          s.alpha.asDiagonal() * Eigen::MatrixXd(s.L.triangularView<Eigen::Lower>());
      feat.factors.push_back(a * a.transpose());  // B
      for (int k = 2; k >= 0; --k) {
        const Eigen::MatrixXd& x = data.design.components[k].unique_rows;
        Eigen::MatrixXd phi(x.rows(), 1 + x.cols());
        phi.col(0).setOnes();
        phi.rightCols(x.cols()) = x;
        Eigen::VectorXd d = Eigen::VectorXd::Ones(phi.cols());
        if (kind == ModelKind::LINm && k == 2)
          d.tail(x.cols()).array() *= 1.0 + s.sigma2_re;
        feat.factors.push_back(phi * d.asDiagonal() * phi.transpose());
      }
      const double err = (dense_kron(feat) - cov).cwiseAbs().maxCoeff();
      (kind == ModelKind::LINf ? worst_f : worst_m) = std::max(
          kind == ModelKind::LINf ? worst_f : worst_m, err);
    }
  }
  std::printf("  max abs error: fixed %.3g, random-effect variant %.3g\n", worst_f, worst_m);
  return worst_f <= 1e-8 && worst_m <= 1e-8;
}

// ---- criterion 4: spherical noise breaks the Kronecker structure ----
bool criterion_eq8() {
  std::mt19937_64 rng(401);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd k1 = random_spd(2, rng), k2 = random_spd(2, rng);
    // skip the measure-zero case K2 ~ c I
    if (std::abs(k2(0, 1)) < 0.05 && std::abs(k2(0, 0) - k2(1, 1)) < 0.05) continue;
    KroneckerFactors lhs_f, base;
    Eigen::MatrixXd k1s = k1;
    k1s.diagonal().array() += 1.0;  // sigma^2 = 1
    lhs_f.factors = {k1s, k2};
    base.factors = {k1, k2};
    const Eigen::MatrixXd diff =
        dense_kron(lhs_f) - (dense_kron(base) + Eigen::MatrixXd::Identity(4, 4));
    if (diff.cwiseAbs().maxCoeff() <= 0.1) return false;
  }
  return true;
}

// ---- criterion 5: sampler calibration on a 10-D correlated Gaussian ----
bool criterion_sampler() {
  const int dim = 10;
  Eigen::MatrixXd cov(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) cov(i, j) = std::pow(0.7, std::abs(i - j));
  const Eigen::MatrixXd prec = cov.inverse();
  LogDensityGrad target = [prec](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = -prec * x;
    return -0.5 * x.dot(prec * x);
  };
  SamplerSettings s;
  s.warmup = 1000;
  s.samples = 1000;
  s.seed = 501;
  std::vector<Eigen::MatrixXd> draws;
  const NutsResult res = nuts_sample_collect(target, dim, s, draws);

  bool ok = true;
  double max_rhat = 0.0;
  for (int j = 0; j < dim; ++j) {
    std::vector<Eigen::VectorXd> series;
    double mean = 0.0;
    for (const auto& m : draws) {
      series.push_back(m.col(j));
      mean += m.col(j).mean();
    }
    mean /= static_cast<double>(draws.size());
    const double e = ess(series);
    const double rh = split_rhat(series);
    max_rhat = std::max(max_rhat, rh);
    if (std::abs(mean) >= 3.0 * std::sqrt(cov(j, j)) / std::sqrt(e)) ok = false;
  }
  const double div_rate =
      static_cast<double>(res.total_divergences()) / (s.chains * s.samples);
  std::printf("  divergence rate %.4f%%, max Rhat %.4f\n", 100.0 * div_rate, max_rhat);
  return ok && div_rate < 0.001 && max_rhat < 1.01;
}

Eigen::Index hyper_index(const std::vector<std::string>& names, const std::string& want) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == want) return static_cast<Eigen::Index>(i);
  throw std::runtime_error("hyperparameter not found: " + want);
}

double pooled_mean(const std::vector<Eigen::MatrixXd>& chains, Eigen::Index col) {
  double sum = 0.0;
  Eigen::Index n = 0;
  for (const auto& m : chains) {
    sum += m.col(col).sum();
    n += m.rows();
  }
  return sum / static_cast<double>(n);
}

// ---- criterion 6: hyperparameter recovery on the benchmark dataset ----
bool criterion_recovery() {
  SimConfig sim_cfg;
  sim_cfg.seed = 601;
  const SimResult sim = simulate_dataset(sim_cfg);
  ModelConfig cfg;
  cfg.kind = ModelKind::GPf;
  SamplerSettings s;
  s.seed = 602;
  const FitResult fit = fit_model(sim.data, cfg, s);

  const double alpha_n1_std = pooled_mean(fit.hyper_draws, hyper_index(fit.hyper_names, "alpha_n_1"));
  const double noise_sd = alpha_n1_std * fit.standardization.outputs[0].sd;
  const double rho2 = pooled_mean(fit.hyper_draws, hyper_index(fit.hyper_names, "rho_2"));
  std::printf("  noise sd (data scale) %.4f, rho_2 %.4f, max Rhat %.4f, divergences %d\n",
              noise_sd, rho2, fit.max_rhat(), fit.sampler_stats.total_divergences());
  return noise_sd >= 0.08 && noise_sd <= 0.14 && rho2 >= 0.7 && rho2 <= 1.3 &&
         fit.max_rhat() < 1.1;
}

// ---- criterion 7: GP beats the linear baseline under 10-fold CV ----
bool criterion_cv() {
  SimConfig sim_cfg;
  sim_cfg.seed = 701;
  const SimResult sim = simulate_dataset(sim_cfg);
  ExperimentSettings settings;
  settings.k = 10;
  settings.seed = 702;
  settings.sampler.warmup = 200;
  settings.sampler.samples = 200;
  const ReportBundle bundle = run_experiment(sim.data, {"gp.f", "lin.f"}, settings);
  if (!bundle.failed_folds.empty()) {
    for (const auto& f : bundle.failed_folds) std::printf("  failed: %s\n", f.c_str());
    return false;
  }
  const ComparisonMatrix& out1 = bundle.comparisons[0];  // Gaussian output 1
  const double p = out1.values(1, 0), r = out1.values(0, 1);
  std::printf("  output 1 (Gaussian): corrected p %.4g, rank-biserial r %.3f\n", p, r);
  return p < 0.01 && r < -0.5;
}

// ---- criterion 8: Wilcoxon normal approximation vs exact enumeration ----
bool criterion_wilcoxon() {
  std::mt19937_64 rng(801);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(12), b(12, 0.0);
    for (auto& v : a) {
      v = normal(rng);
      if (v == 0.0) v = 0.5;
    }
    const WilcoxonResult exact = wilcoxon_paired(a, b);
    const WilcoxonResult approx = wilcoxon_paired_normal(a, b);
    worst = std::max(worst, std::abs(exact.p - approx.p));
  }
  // sign conventions
  const WilcoxonResult dom = wilcoxon_paired({-1.0, -2.0, -0.5}, {0.0, 0.0, 0.0});
  const WilcoxonResult rev = wilcoxon_paired({0.0, 0.0, 0.0}, {-1.0, -2.0, -0.5});
  std::printf("  max |exact - normal| p over 1000 trials: %.4f\n", worst);
  return worst <= 0.02 && dom.rank_biserial == -1.0 && rev.rank_biserial == 1.0;
}

// ---- criterion 9: all-missing data reduces to prior sampling ----
bool criterion_prior() {
  GridData data;
  std::mt19937_64 rng(901);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  const int sizes[3] = {4, 3, 2};
  for (int k = 0; k < 3; ++k) {
    auto& comp = data.design.components[k];
    comp.unique_rows.resize(sizes[k], 1);
    for (int i = 0; i < sizes[k]; ++i) comp.unique_rows(i, 0) = ux(rng) + 2.0 * i;
    comp.column_names = {"x" + std::to_string(k + 1)};
    comp.kernel.kind = KernelKind::SE_ARD;
    comp.kernel.active_columns = {0};
  }
  data.design.n_outputs = 1;
  data.design.output_families = {Family::Gaussian};
  data.design.output_names = {"y"};
  data.outcomes.values = Eigen::MatrixXd::Zero(1, data.design.cells());
  data.outcomes.observed.setConstant(1, data.design.cells(), false);  // all missing

  ModelConfig cfg;
  const Posterior post(data.design, data.outcomes, cfg);
  LogDensityGrad target = [&post](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return post.log_density(x, &g);
  };
  SamplerSettings s;
  s.warmup = 500;
  s.samples = 1000;  // 4 chains x 1000 = 4000 draws
  s.seed = 902;
  std::vector<Eigen::MatrixXd> draws;
  nuts_sample_collect(target, post.dim(), s, draws);
  std::vector<double> rho1;
  for (const auto& m : draws)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      rho1.push_back(std::exp(m(i, post.rho_offset(0))));
  const double ks = ks_statistic(rho1, inv_gamma_2_1_cdf);
  std::printf("  KS distance of rho_1 draws to InvGamma(2,1): %.4f (n=%zu)\n", ks, rho1.size());
  return ks < 0.1;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return fa && fb && sa.str() == sb.str();
}

int run_cli_args(std::vector<std::string> args) {
  std::vector<const char*> argv{"krongp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// ---- criterion 10: byte-identical outputs for fixed seeds ----
bool criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "krongp_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);
  auto sub = [&](const std::string& s) { return (root / s).string(); };

  for (const std::string tag : {"a", "b"}) {
    if (run_cli_args({"simulate", "--n1", "4", "--n2", "3", "--n3", "2", "--seed", "11",
                      "--out", sub("sim_" + tag)}) != 0)
      return false;
    const int code = run_cli_args({"fit", "--data", sub("sim_a") + "/data.csv", "--schema",
                                   sub("sim_a") + "/schema.json", "--model", "gp.f", "--chains",
                                   "4", "--warmup", "150", "--samples", "150", "--seed", "12",
                                   "--out", sub("fit_" + tag)});
    if (code != 0 && code != 2) return false;
  }
  bool ok = same_bytes(sub("sim_a") + "/data.csv", sub("sim_b") + "/data.csv") &&
            same_bytes(sub("sim_a") + "/schema.json", sub("sim_b") + "/schema.json");
  // manifest.json carries a wall-clock timestamp and is excluded
  for (const std::string f : {"chain_1.csv", "chain_2.csv", "chain_3.csv", "chain_4.csv",
                              "summary.csv", "f_mean.csv"})
    ok = ok && same_bytes(sub("fit_a") + "/" + f, sub("fit_b") + "/" + f);
  fs::remove_all(root);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int number;
    const char* name;
    bool (*fn)();
  };
  const Entry entries[] = {
      {1, "Kronecker mat-vec correctness", criterion_kron},
      {2, "gradient exactness", criterion_gradient},
      {3, "all-linear feature-space equivalence", criterion_linear_equivalence},
      {4, "spherical noise is not Kronecker-separable", criterion_eq8},
      {5, "sampler calibration", criterion_sampler},
      {6, "parameter recovery on simulated data", criterion_recovery},
      {7, "predictive superiority under 10-fold CV", criterion_cv},
      {8, "Wilcoxon normal approximation oracle", criterion_wilcoxon},
      {9, "prior-sampling degeneracy", criterion_prior},
      {10, "seed determinism of simulate and fit", criterion_determinism},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  Reporter rep;
  for (const Entry& e : entries) {
    if (!selected.empty() && !selected.count(e.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    try {
      pass = e.fn();
    } catch (const std::exception& ex) {
      std::printf("  exception: %s\n", ex.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.result(e.number, e.name, pass, secs);
  }
  if (rep.failures == 0) std::printf("all criteria passed\n");
  return rep.failures;
}
