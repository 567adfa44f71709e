#include "krongp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "krongp/mathutil.hpp"

namespace krongp {

namespace {

struct RankedDiffs {
  std::vector<double> ranks;  // midranks of |d|
  std::vector<int> signs;     // +1 / -1
  double w_plus = 0.0, w_minus = 0.0;
  double tie_correction = 0.0;  // sum (t^3 - t) over tie groups
};

RankedDiffs rank_differences(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: unpaired samples");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (diff != 0.0) d.push_back(diff);
  }
  if (d.empty()) throw std::runtime_error("all differences zero");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });

  RankedDiffs r;
  r.ranks.resize(d.size());
  r.signs.resize(d.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           std::abs(d[order[j + 1]]) == std::abs(d[order[i]]))
      ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    const auto t = static_cast<double>(j - i + 1);
    if (t > 1.0) r.tie_correction += t * t * t - t;
    for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = midrank;
    i = j + 1;
  }
  for (std::size_t k = 0; k < d.size(); ++k) {
    r.signs[k] = d[k] > 0.0 ? 1 : -1;
    (d[k] > 0.0 ? r.w_plus : r.w_minus) += r.ranks[k];
  }
  return r;
}

double exact_p(const RankedDiffs& r) {
  // Enumerate the W+ distribution over all sign assignments.  Midranks
  // are half-integers, so work on doubled ranks to stay integral.
  const std::size_t n = r.ranks.size();
  std::vector<long> dr(n);
  long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    dr[i] = std::lround(2.0 * r.ranks[i]);
    total += dr[i];
  }
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  long reach = 0;
  for (std::size_t i = 0; i < n; ++i) {
    reach += dr[i];
    for (long s = reach; s >= dr[i]; --s) count[s] += count[s - dr[i]];
  }
  const double denom = std::ldexp(1.0, static_cast<int>(n));
  const long w = std::lround(2.0 * r.w_plus);
  double lower = 0.0, upper = 0.0;
  for (long s = 0; s <= total; ++s) {
    if (s <= w) lower += count[s];
    if (s >= w) upper += count[s];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / denom);
}

double normal_p(const RankedDiffs& r) {
  const auto n = static_cast<double>(r.ranks.size());
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - r.tie_correction / 48.0;
  if (var <= 0.0) return 1.0;
  const double dev = r.w_plus - mean;
  const double cc = dev > 0.0 ? -0.5 : (dev < 0.0 ? 0.5 : 0.0);
  const double z = (dev + cc) / std::sqrt(var);
  const double tail = 0.5 * std::erfc(std::abs(z) / std::sqrt(2.0));
  return std::min(1.0, 2.0 * tail);
}

WilcoxonResult finish(const RankedDiffs& r, bool force_normal) {
  WilcoxonResult out;
  out.w_plus = r.w_plus;
  out.w_minus = r.w_minus;
  out.n_used = static_cast<int>(r.ranks.size());
  out.rank_biserial = (r.w_plus - r.w_minus) / (r.w_plus + r.w_minus);
  out.exact = !force_normal && out.n_used <= 12;
  out.p = out.exact ? exact_p(r) : normal_p(r);
  return out;
}

}  // namespace

WilcoxonResult wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b) {
  return finish(rank_differences(a, b), false);
}

WilcoxonResult wilcoxon_paired_normal(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  return finish(rank_differences(a, b), true);
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

}  // namespace krongp
