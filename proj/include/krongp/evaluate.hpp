#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "krongp/fit.hpp"
#include "krongp/grid.hpp"
#include "krongp/stats.hpp"

namespace krongp {

struct CvFold {
  std::vector<std::pair<int, Eigen::Index>> test_cells;  // (output, cell)
};

/// Partition the observed cells uniformly at random into k folds.
/// Already-missing cells never enter a test fold.
std::vector<CvFold> cv_folds(const GridData& data, int k, std::uint64_t seed);

double loss_gaussian(double y, double f_pm);   // |y - f_pm|
double loss_bernoulli(double y, double f_pm);  // log Phi(-f_pm (2y - 1))

struct LossRecord {
  std::string method;
  int output = 0;
  Eigen::Index cell = 0;
  int fold = 0;
  double loss = 0.0;
  Family family = Family::Gaussian;
};

/// Per-output method-comparison matrix: lower triangle Bonferroni-
/// corrected p (x4, capped at 1), upper triangle rank-biserial r,
/// NaN on the diagonal.
struct ComparisonMatrix {
  int output = 0;
  std::vector<std::string> methods;
  Eigen::MatrixXd values;
};

/// Paired Wilcoxon comparisons over loss populations aligned by
/// (output, cell); one matrix per output.
std::vector<ComparisonMatrix> compare_methods(const std::vector<std::string>& methods,
                                              const std::vector<LossRecord>& losses,
                                              int n_outputs);

struct ExperimentSettings {
  int k = 10;
  std::uint64_t seed = 1;
  SamplerSettings sampler;
};

struct ReportBundle {
  std::vector<std::string> methods;
  std::vector<LossRecord> losses;
  std::vector<ComparisonMatrix> comparisons;
  // Fold-1 posterior summaries, one per method.
  std::vector<std::vector<SummaryRow>> fold1_summaries;
  std::vector<std::string> failed_folds;  // "method/fold: what()"
};

/// 10-fold CV over the given methods; fits every (fold, method) pair,
/// scores test cells by posterior-mean latent f, and aggregates.
ReportBundle run_experiment(const GridData& data, const std::vector<std::string>& methods,
                            const ExperimentSettings& settings);

/// comparison_<output>.csv, losses.csv, summary_fold1_<method>.csv,
/// manifest.json under `out_dir`.
void write_report_bundle(const ReportBundle& bundle, const ExperimentSettings& settings,
                         const std::string& out_dir);

/// Render the bundle's comparison matrices as aligned text tables
/// (dash on the diagonal).
std::string render_report(const std::string& bundle_dir);

}  // namespace krongp
