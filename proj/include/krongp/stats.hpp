#pragma once

#include <functional>
#include <vector>

namespace krongp {

struct WilcoxonResult {
  double p = 1.0;             // two-sided
  double rank_biserial = 0.0; // (W+ - W-)/(W+ + W-); -1 when a uniformly smaller
  double w_plus = 0.0, w_minus = 0.0;
  int n_used = 0;   // pairs after dropping zero differences
  bool exact = false;
};

/// Wilcoxon signed-rank test on paired samples.  Zero differences are
/// dropped; midranks break ties.  Exact enumeration for n <= 12, normal
/// approximation with tie correction and continuity correction above.
/// Throws when all differences are zero.
WilcoxonResult wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b);

/// As above but forcing the normal approximation (oracle cross-checks).
WilcoxonResult wilcoxon_paired_normal(const std::vector<double>& a,
                                      const std::vector<double>& b);

/// One-sample Kolmogorov-Smirnov distance against a reference CDF.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);

}  // namespace krongp
