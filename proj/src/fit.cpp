#include "krongp/fit.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace krongp {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json record_to_json(const StandardizationRecord& rec) {
  auto stats = [](const StandardizationRecord::ColumnStats& s) {
    return nlohmann::json{{"applied", s.applied}, {"mean", s.mean}, {"sd", s.sd}};
  };
  nlohmann::json j;
  for (int k = 0; k < 3; ++k) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : rec.covariates[k]) arr.push_back(stats(s));
    j["covariates"].push_back(arr);
  }
  j["outputs"] = nlohmann::json::array();
  for (const auto& s : rec.outputs) j["outputs"].push_back(stats(s));
  return j;
}

}  // namespace

double FitResult::max_rhat() const {
  double m = 0.0;
  for (const auto& row : summary)
    if (!row.degenerate && row.rhat > m) m = row.rhat;
  return m;
}

FitResult fit_model(const GridData& data, const ModelConfig& cfg,
                    const SamplerSettings& settings) {
  FitResult fit;
  fit.model_config = cfg;
  fit.sampler_settings = settings;

  GridData std_data = standardize(data, fit.standardization);
  // The posterior shares the standardized design/outcomes read-only
  // across chains; it must outlive the sampler run.
  const Posterior post(std_data.design, std_data.outcomes, cfg);
  fit.hyper_names = post.hyper_names();
  const auto n_hyper = static_cast<Eigen::Index>(fit.hyper_names.size());
  const Eigen::Index cells = std_data.design.cells();
  const int n4 = std_data.design.n_outputs;

  fit.hyper_draws.assign(settings.chains, Eigen::MatrixXd(settings.samples, n_hyper));
  std::vector<Eigen::MatrixXd> f_sums(settings.chains, Eigen::MatrixXd::Zero(n4, cells));

  LogDensityGrad target = [&post](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return post.log_density(x, &g);
  };
  DrawSink sink = [&](int chain, int it, const Eigen::VectorXd& flat) {
    const ParameterState state = post.constrain(flat);
    fit.hyper_draws[chain].row(it) = post.hyper_values(state).transpose();
    f_sums[chain] += post.build_latent_f(flat);
  };
  fit.sampler_stats = nuts_sample(target, post.dim(), settings, sink);

  Eigen::MatrixXd f_mean = Eigen::MatrixXd::Zero(n4, cells);
  for (const auto& s : f_sums) f_mean += s;
  f_mean /= static_cast<double>(settings.chains) * settings.samples;
  // Back to the data scale for Gaussian outputs; probit rows unchanged.
  for (int o = 0; o < n4; ++o) {
    const auto& st = fit.standardization.outputs[o];
    if (st.applied) f_mean.row(o) = f_mean.row(o).array() * st.sd + st.mean;
  }
  fit.f_mean = std::move(f_mean);
  fit.summary = summarize(fit.hyper_names, fit.hyper_draws);
  return fit;
}

void write_fit_outputs(const FitResult& fit, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  for (std::size_t c = 0; c < fit.hyper_draws.size(); ++c) {
    std::ofstream out(fs::path(out_dir) / ("chain_" + std::to_string(c + 1) + ".csv"));
    if (!out) throw std::runtime_error("cannot write chain file in " + out_dir);
    for (std::size_t j = 0; j < fit.hyper_names.size(); ++j)
      out << (j ? "," : "") << fit.hyper_names[j];
    out << '\n';
    const Eigen::MatrixXd& m = fit.hyper_draws[c];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << fmt17(m(i, j));
      out << '\n';
    }
  }

  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), fit.summary);

  {
    std::ofstream out(fs::path(out_dir) / "f_mean.csv");
    out << "output,cell,f_mean\n";
    for (Eigen::Index o = 0; o < fit.f_mean.rows(); ++o)
      for (Eigen::Index cell = 0; cell < fit.f_mean.cols(); ++cell)
        out << o << ',' << cell << ',' << fmt17(fit.f_mean(o, cell)) << '\n';
  }

  nlohmann::json manifest;
  manifest["command"] = "fit";
  manifest["model"] = to_string(fit.model_config.kind);
  manifest["jitter"] = fit.model_config.jitter;
  manifest["sampler"] = {{"chains", fit.sampler_settings.chains},
                         {"warmup", fit.sampler_settings.warmup},
                         {"samples", fit.sampler_settings.samples},
                         {"target_accept", fit.sampler_settings.target_accept},
                         {"max_tree_depth", fit.sampler_settings.max_tree_depth},
                         {"seed", fit.sampler_settings.seed},
                         {"threads", fit.sampler_settings.threads}};
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& c : fit.sampler_stats.chains)
    chains.push_back({{"divergences", c.divergences}, {"step_size", c.step_size}});
  manifest["chains"] = chains;
  manifest["max_rhat"] = fit.max_rhat();
  manifest["standardization"] = record_to_json(fit.standardization);
  manifest["timestamp"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  out << manifest.dump(2) << '\n';
}

}  // namespace krongp
