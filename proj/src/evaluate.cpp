#include "krongp/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "krongp/mathutil.hpp"
#include "krongp/model.hpp"

namespace krongp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::vector<CvFold> cv_folds(const GridData& data, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cv_folds: k must be >= 2");
  std::vector<std::pair<int, Eigen::Index>> observed;
  for (int o = 0; o < data.design.n_outputs; ++o)
    for (Eigen::Index cell = 0; cell < data.design.cells(); ++cell)
      if (data.outcomes.observed(o, cell)) observed.emplace_back(o, cell);
  if (static_cast<int>(observed.size()) < k)
    throw std::invalid_argument("cv_folds: fewer observed cells than folds");

  std::mt19937_64 rng(seed);
  std::shuffle(observed.begin(), observed.end(), rng);
  std::vector<CvFold> folds(k);
  const std::size_t n = observed.size();
  for (int j = 0; j < k; ++j) {
    const std::size_t lo = n * static_cast<std::size_t>(j) / static_cast<std::size_t>(k);
    const std::size_t hi = n * static_cast<std::size_t>(j + 1) / static_cast<std::size_t>(k);
    folds[j].test_cells.assign(observed.begin() + static_cast<std::ptrdiff_t>(lo),
                               observed.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return folds;
}

double loss_gaussian(double y, double f_pm) { return std::abs(y - f_pm); }

double loss_bernoulli(double y, double f_pm) { return norm_lcdf(-f_pm * (2.0 * y - 1.0)); }

std::vector<ComparisonMatrix> compare_methods(const std::vector<std::string>& methods,
                                              const std::vector<LossRecord>& losses,
                                              int n_outputs) {
  if (methods.size() < 2) throw std::invalid_argument("compare_methods: need >= 2 methods");
  const auto nm = static_cast<Eigen::Index>(methods.size());
  std::vector<ComparisonMatrix> out;
  for (int o = 0; o < n_outputs; ++o) {
    // Align losses by cell within this output.
    std::vector<std::map<Eigen::Index, double>> per_method(methods.size());
    for (const auto& rec : losses) {
      if (rec.output != o) continue;
      const auto mi = std::find(methods.begin(), methods.end(), rec.method) - methods.begin();
      if (mi == nm) throw std::invalid_argument("compare_methods: unknown method " + rec.method);
      if (!per_method[static_cast<std::size_t>(mi)].emplace(rec.cell, rec.loss).second)
        throw std::invalid_argument("compare_methods: duplicate loss for a cell");
    }
    for (std::size_t m = 1; m < per_method.size(); ++m)
      if (per_method[m].size() != per_method[0].size())
        throw std::invalid_argument("compare_methods: unpaired loss sets");

    ComparisonMatrix cm;
    cm.output = o;
    cm.methods = methods;
    cm.values = Eigen::MatrixXd::Constant(nm, nm, std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < nm; ++i)
      for (Eigen::Index j = i + 1; j < nm; ++j) {
        std::vector<double> a, b;
        for (const auto& [cell, loss] : per_method[static_cast<std::size_t>(i)]) {
          a.push_back(loss);
          b.push_back(per_method[static_cast<std::size_t>(j)].at(cell));
        }
        const WilcoxonResult w = wilcoxon_paired(a, b);
        cm.values(i, j) = w.rank_biserial;
        cm.values(j, i) = std::min(1.0, 4.0 * w.p);  // four-fold Bonferroni
      }
    out.push_back(std::move(cm));
  }
  return out;
}

ReportBundle run_experiment(const GridData& data, const std::vector<std::string>& methods,
                            const ExperimentSettings& settings) {
  if (methods.size() < 2) throw std::invalid_argument("run_experiment: need >= 2 methods");
  const auto folds = cv_folds(data, settings.k, settings.seed);

  ReportBundle bundle;
  bundle.methods = methods;
  bundle.fold1_summaries.resize(methods.size());
  std::set<int> failed_fold_ids;

  for (std::size_t fi = 0; fi < folds.size(); ++fi) {
    GridData train = data;
    for (const auto& [o, cell] : folds[fi].test_cells) train.outcomes.observed(o, cell) = false;

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      ModelConfig cfg;
      cfg.kind = model_kind_from_string(methods[mi]);
      SamplerSettings s = settings.sampler;
      // Independent deterministic substream per (fold, method).
      s.seed = settings.sampler.seed +
               10000 * (fi * methods.size() + mi + 1);
      try {
        const FitResult fit = fit_model(train, cfg, s);
        if (fi == 0) bundle.fold1_summaries[mi] = fit.summary;
        for (const auto& [o, cell] : folds[fi].test_cells) {
          LossRecord rec;
          rec.method = methods[mi];
          rec.output = o;
          rec.cell = cell;
          rec.fold = static_cast<int>(fi);
          rec.family = data.design.output_families[static_cast<std::size_t>(o)];
          const double y = data.outcomes.values(o, cell);
          const double f_pm = fit.f_mean(o, cell);
          rec.loss = rec.family == Family::Gaussian ? loss_gaussian(y, f_pm)
                                                    : loss_bernoulli(y, f_pm);
          bundle.losses.push_back(std::move(rec));
        }
      } catch (const std::exception& e) {
        bundle.failed_folds.push_back(methods[mi] + "/" + std::to_string(fi + 1) + ": " +
                                      e.what());
        failed_fold_ids.insert(static_cast<int>(fi));
      }
    }
  }
  // A failed (fold, method) fit would leave the loss sets unpaired, so the
  // whole fold is excluded from the comparison; the failure stays on record.
  std::vector<LossRecord> paired;
  for (auto& rec : bundle.losses)
    if (!failed_fold_ids.count(rec.fold)) paired.push_back(rec);
  if (!paired.empty())
    bundle.comparisons = compare_methods(methods, paired, data.design.n_outputs);
  return bundle;
}

void write_report_bundle(const ReportBundle& bundle, const ExperimentSettings& settings,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  for (const auto& cm : bundle.comparisons) {
    std::ofstream out(fs::path(out_dir) /
                      ("comparison_output" + std::to_string(cm.output + 1) + ".csv"));
    out << "method";
    for (const auto& m : cm.methods) out << ',' << m;
    out << '\n';
    for (Eigen::Index i = 0; i < cm.values.rows(); ++i) {
      out << cm.methods[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < cm.values.cols(); ++j)
        out << ',' << (i == j ? std::string("-") : fmt(cm.values(i, j)));
      out << '\n';
    }
  }

  {
    std::ofstream out(fs::path(out_dir) / "losses.csv");
    out << "method,output,cell,fold,family,loss\n";
    for (const auto& r : bundle.losses)
      out << r.method << ',' << r.output + 1 << ',' << r.cell << ',' << r.fold + 1 << ','
          << (r.family == Family::Gaussian ? "gaussian" : "bernoulli") << ','
          << fmt(r.loss) << '\n';
  }

  for (std::size_t mi = 0; mi < bundle.methods.size(); ++mi)
    if (!bundle.fold1_summaries[mi].empty())
      write_summary_csv(
          (fs::path(out_dir) / ("summary_fold1_" + bundle.methods[mi] + ".csv")).string(),
          bundle.fold1_summaries[mi]);

  nlohmann::json manifest;
  manifest["command"] = "cv";
  manifest["methods"] = bundle.methods;
  manifest["k"] = settings.k;
  manifest["seed"] = settings.seed;
  manifest["sampler"] = {{"chains", settings.sampler.chains},
                         {"warmup", settings.sampler.warmup},
                         {"samples", settings.sampler.samples},
                         {"seed", settings.sampler.seed}};
  manifest["failed_folds"] = bundle.failed_folds;
  manifest["timestamp"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  out << manifest.dump(2) << '\n';
}

std::string render_report(const std::string& bundle_dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (!fs::is_directory(bundle_dir))
    throw std::runtime_error("report: bundle directory not found: " + bundle_dir);
  for (const auto& entry : fs::directory_iterator(bundle_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("comparison_", 0) == 0 && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  if (files.empty()) throw std::runtime_error("report: no comparison files in " + bundle_dir);
  std::sort(files.begin(), files.end());

  std::ostringstream report;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      rows.push_back(std::move(cells));
    }
    std::vector<std::size_t> widths;
    for (const auto& row : rows)
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j >= widths.size()) widths.push_back(0);
        widths[j] = std::max(widths[j], row[j].size());
      }
    report << file.stem().string() << "\n";
    for (const auto& row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) report << "  ";
        report << row[j] << std::string(widths[j] - row[j].size(), ' ');
      }
      report << "\n";
    }
    report << "\n";
  }
  return report.str();
}

}  // namespace krongp
