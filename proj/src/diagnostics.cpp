#include "krongp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace krongp {

namespace {

/// Split every chain in half, dropping the middle draw when odd.
std::vector<Eigen::VectorXd> split_chains(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const Eigen::Index h = c.size() / 2;
    out.push_back(c.head(h));
    out.push_back(c.tail(h));
  }
  return out;
}

void check_chains(const std::vector<Eigen::VectorXd>& chains, Eigen::Index min_draws) {
  if (chains.size() < 2) throw std::invalid_argument("diagnostics: need >= 2 chains");
  for (const auto& c : chains) {
    if (c.size() < min_draws) throw std::invalid_argument("diagnostics: chains too short");
    if (!c.allFinite()) throw std::invalid_argument("diagnostics: non-finite draw");
    const double var = (c.array() - c.mean()).square().sum();
    if (var == 0.0) throw std::runtime_error("degenerate chain");
  }
}

double within_variance(const std::vector<Eigen::VectorXd>& chains) {
  double w = 0.0;
  for (const auto& c : chains)
    w += (c.array() - c.mean()).square().sum() / static_cast<double>(c.size() - 1);
  return w / static_cast<double>(chains.size());
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains, 4);
  const auto halves = split_chains(chains);
  const auto m = static_cast<double>(halves.size());
  const auto n = static_cast<double>(halves.front().size());

  double grand = 0.0;
  for (const auto& c : halves) grand += c.mean();
  grand /= m;
  double b = 0.0;
  for (const auto& c : halves) b += (c.mean() - grand) * (c.mean() - grand);
  b *= n / (m - 1.0);
  const double w = within_variance(halves);
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double ess(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains, 4);
  const auto halves = split_chains(chains);
  const auto m = static_cast<double>(halves.size());
  const Eigen::Index n = halves.front().size();

  // Per-chain autocovariances (biased, 1/n normalization).
  std::vector<Eigen::VectorXd> acov(halves.size());
  double mean_var = 0.0;
  for (std::size_t c = 0; c < halves.size(); ++c) {
    const Eigen::VectorXd centered = halves[c].array() - halves[c].mean();
    acov[c].resize(n);
    for (Eigen::Index t = 0; t < n; ++t)
      acov[c](t) = centered.head(n - t).dot(centered.tail(n - t)) / static_cast<double>(n);
    mean_var += acov[c](0) * static_cast<double>(n) / static_cast<double>(n - 1);
  }
  mean_var /= m;

  double grand = 0.0;
  for (const auto& c : halves) grand += c.mean();
  grand /= m;
  double b = 0.0;
  for (const auto& c : halves) b += (c.mean() - grand) * (c.mean() - grand);
  b *= static_cast<double>(n) / (m - 1.0);
  const double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n) +
                          b / static_cast<double>(n);

  auto rho = [&](Eigen::Index t) {
    double a = 0.0;
    for (const auto& ac : acov) a += ac(t);
    a /= m;
    return 1.0 - (mean_var - a) / var_plus;
  };

  // Geyer: sum consecutive pairs while positive, enforce monotone decrease.
  double tau = rho(0);  // = pair (rho_0 + rho_1) handled below; start with lag-0 term
  double prev_pair = std::numeric_limits<double>::infinity();
  double sum_pairs = 0.0;
  for (Eigen::Index t = 1; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    sum_pairs += pair;
    prev_pair = pair;
  }
  tau += 2.0 * sum_pairs;
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n) + 10.0));
  return m * static_cast<double>(n) / tau;
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

std::vector<SummaryRow> summarize(const std::vector<std::string>& names,
                                  const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.empty() || chains.front().rows() == 0)
    throw std::invalid_argument("summarize: no draws");
  for (const auto& c : chains)
    if (c.cols() != static_cast<Eigen::Index>(names.size()))
      throw std::invalid_argument("summarize: column/name mismatch");

  std::vector<SummaryRow> rows;
  rows.reserve(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    SummaryRow row;
    row.name = names[j];
    std::vector<double> pooled;
    std::vector<Eigen::VectorXd> series;
    for (const auto& c : chains) {
      series.push_back(c.col(static_cast<Eigen::Index>(j)));
      for (Eigen::Index i = 0; i < c.rows(); ++i) pooled.push_back(c(i, static_cast<Eigen::Index>(j)));
    }
    const auto n = static_cast<double>(pooled.size());
    double mean = 0.0;
    for (double v : pooled) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : pooled) ss += (v - mean) * (v - mean);
    row.mean = mean;
    row.sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.lo95 = quantile(pooled, 0.025);
    row.hi95 = quantile(pooled, 0.975);
    try {
      row.rhat = split_rhat(series);
      row.n_eff = ess(series);
    } catch (const std::exception&) {
      row.degenerate = true;
      row.rhat = std::numeric_limits<double>::quiet_NaN();
      row.n_eff = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "parameter,mean,sd,l-95% CI,u-95% CI,n.eff,Rhat\n";
  char buf[64];
  auto fmt = [&](double v) {
    if (std::isnan(v)) return std::string("NA");
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  for (const auto& r : rows)
    out << r.name << ',' << fmt(r.mean) << ',' << fmt(r.sd) << ',' << fmt(r.lo95) << ','
        << fmt(r.hi95) << ',' << fmt(r.n_eff) << ',' << fmt(r.rhat) << '\n';
}

}  // namespace krongp
