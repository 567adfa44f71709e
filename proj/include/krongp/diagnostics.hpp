#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace krongp {

/// Split-Rhat over >=2 chains of >=4 draws each.  Throws on a
/// zero-variance ("degenerate") chain.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

/// Effective sample size across chains, via autocorrelations with Geyer
/// initial-monotone truncation.  Throws on degenerate chains.
double ess(const std::vector<Eigen::VectorXd>& chains);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lo95 = 0.0;   // 2.5% quantile
  double hi95 = 0.0;   // 97.5% quantile
  double n_eff = 0.0;  // NaN when degenerate
  double rhat = 0.0;   // NaN when degenerate
  bool degenerate = false;
};

/// Equal-tailed quantile (linear interpolation) of a copy of xs.
double quantile(std::vector<double> xs, double p);

/// Per-parameter posterior summary in the fixed column order
/// mean, sd, l-95% CI, u-95% CI, n.eff, Rhat.  `chains` holds one
/// (draws x params) matrix per chain; columns follow `names`.
std::vector<SummaryRow> summarize(const std::vector<std::string>& names,
                                  const std::vector<Eigen::MatrixXd>& chains);

/// CSV with header: parameter,mean,sd,l-95% CI,u-95% CI,n.eff,Rhat
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

}  // namespace krongp
