#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "krongp/diagnostics.hpp"
#include "krongp/sampler.hpp"

using namespace krongp;

namespace {

LogDensityGrad std_normal(Eigen::Index dim) {
  return [dim](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = -x;
    return -0.5 * x.squaredNorm();
  };
}

Eigen::VectorXd pooled(const std::vector<Eigen::MatrixXd>& draws, Eigen::Index col) {
  Eigen::Index total = 0;
  for (const auto& m : draws) total += m.rows();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& m : draws) {
    out.segment(at, m.rows()) = m.col(col);
    at += m.rows();
  }
  return out;
}

}  // namespace

TEST_CASE("NUTS recovers a 1-D standard normal") {
  SamplerSettings s;
  s.seed = 20240101;
  std::vector<Eigen::MatrixXd> draws;
  const NutsResult res = nuts_sample_collect(std_normal(1), 1, s, draws);
  const Eigen::VectorXd all = pooled(draws, 0);
  const double mean = all.mean();
  const double var = (all.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.1);
  CHECK(var > 0.8);
  CHECK(var < 1.2);
  // divergence rate < 0.1% at the adapted step size
  CHECK(res.total_divergences() < s.chains * s.samples / 1000 + 1);
}

TEST_CASE("NUTS recovers a correlated 2-D Gaussian") {
  Eigen::Matrix2d cov;
  cov << 1.0, 0.8, 0.8, 1.0;
  const Eigen::Matrix2d prec = cov.inverse();
  LogDensityGrad target = [prec](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = -prec * x;
    return -0.5 * x.dot(prec * x);
  };
  SamplerSettings s;
  s.warmup = 1000;
  s.samples = 1000;
  s.seed = 7;
  std::vector<Eigen::MatrixXd> draws;
  nuts_sample_collect(target, 2, s, draws);
  const Eigen::VectorXd a = pooled(draws, 0), b = pooled(draws, 1);
  const double ma = a.mean(), mb = b.mean();
  const double corr = ((a.array() - ma) * (b.array() - mb)).mean() /
                      std::sqrt((a.array() - ma).square().mean() *
                                (b.array() - mb).square().mean());
  CHECK(std::abs(corr - 0.8) < 0.05);
}

TEST_CASE("same seed gives bitwise-identical draws") {
  SamplerSettings s;
  s.chains = 2;
  s.warmup = 200;
  s.samples = 200;
  s.seed = 99;
  std::vector<Eigen::MatrixXd> d1, d2;
  nuts_sample_collect(std_normal(3), 3, s, d1);
  nuts_sample_collect(std_normal(3), 3, s, d2);
  REQUIRE(d1.size() == d2.size());
  for (std::size_t c = 0; c < d1.size(); ++c) CHECK(d1[c] == d2[c]);
}

TEST_CASE("moment errors are consistent with ESS on a 2-D Gaussian") {
  SamplerSettings s;
  s.warmup = 1000;
  s.samples = 1000;
  s.seed = 31;
  std::vector<Eigen::MatrixXd> draws;
  nuts_sample_collect(std_normal(2), 2, s, draws);
  for (Eigen::Index j = 0; j < 2; ++j) {
    std::vector<Eigen::VectorXd> series;
    for (const auto& m : draws) series.push_back(m.col(j));
    const double e = ess(series);
    CHECK(std::abs(pooled(draws, j).mean()) < 3.0 / std::sqrt(e));
  }
}

TEST_CASE("leapfrog energy error scales like eps^2") {
  LogDensityGrad target = std_normal(2);
  const Eigen::VectorXd inv_mass = Eigen::VectorXd::Ones(2);
  // integrate to a fixed time horizon and track the worst energy error;
  // the oscillation envelope of a symplectic second-order scheme is O(eps^2)
  auto energy_error = [&](double eps) {
    Eigen::VectorXd theta(2), r(2), grad(2);
    theta << 1.0, -0.5;
    r << 0.3, 0.7;
    double logp = target(theta, grad);
    const double h0 = -logp + 0.5 * r.squaredNorm();
    double worst = 0.0;
    const int steps = static_cast<int>(std::lround(1.6 / eps));
    for (int i = 0; i < steps; ++i) {
      leapfrog(target, inv_mass, eps, theta, r, grad, logp);
      worst = std::max(worst, std::abs(-logp + 0.5 * r.squaredNorm() - h0));
    }
    return worst;
  };
  const double e1 = energy_error(0.2), e2 = energy_error(0.1), e4 = energy_error(0.05);
  CHECK(e1 / e2 > 3.0);  // ~4 for second-order
  CHECK(e1 / e2 < 5.5);
  CHECK(e2 / e4 > 3.0);
  CHECK(e2 / e4 < 5.5);
}

TEST_CASE("initialization failure is reported") {
  LogDensityGrad bad = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
    g.setZero(1);
    return -std::numeric_limits<double>::infinity();
  };
  SamplerSettings s;
  s.chains = 1;
  s.warmup = 10;
  s.samples = 10;
  std::vector<Eigen::MatrixXd> draws;
  CHECK_THROWS(nuts_sample_collect(bad, 1, s, draws));
}

TEST_CASE("settings validation") {
  SamplerSettings s;
  s.target_accept = 1.5;
  CHECK_THROWS(s.validate());
  s.target_accept = 0.8;
  s.chains = 0;
  CHECK_THROWS(s.validate());
}

TEST_CASE("split-Rhat") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> chains(4, Eigen::VectorXd(500));
  for (auto& c : chains)
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = normal(rng);
  CHECK(split_rhat(chains) < 1.05);

  std::vector<Eigen::VectorXd> offset = chains;
  offset[0].array() += 10.0;
  CHECK(split_rhat(offset) > 1.5);

  std::vector<Eigen::VectorXd> flat(2, Eigen::VectorXd::Constant(100, 1.0));
  CHECK_THROWS_WITH_AS(split_rhat(flat), "degenerate chain", std::runtime_error);
}

TEST_CASE("ESS of iid draws is near the draw count") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> chains(4, Eigen::VectorXd(1000));
  for (auto& c : chains)
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = normal(rng);
  const double e = ess(chains);
  CHECK(e > 0.7 * 4000);
  CHECK(e < 1.3 * 4000);
}

TEST_CASE("summarize") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::vector<Eigen::MatrixXd> chains(4, Eigen::MatrixXd(2000, 2));
  for (auto& m : chains)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, 0) = normal(rng);
      m(i, 1) = 1.0;  // frozen parameter
    }
  const auto rows = summarize({"x", "const"}, chains);
  REQUIRE(rows.size() == 2);
  CHECK(std::abs(rows[0].mean) < 0.05);
  CHECK(rows[0].sd == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rows[0].lo95 == doctest::Approx(-1.96).epsilon(0.06));
  CHECK(rows[0].hi95 == doctest::Approx(1.96).epsilon(0.06));
  CHECK(rows[0].rhat < 1.01);
  CHECK(rows[1].mean == doctest::Approx(1.0));
  CHECK(rows[1].sd == doctest::Approx(0.0));
  CHECK(rows[1].degenerate);
}

TEST_CASE("summary CSV uses the fixed column order") {
  const auto path = std::string("/tmp/krongp_summary_test.csv");
  write_summary_csv(path, {});
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "parameter,mean,sd,l-95% CI,u-95% CI,n.eff,Rhat");
  std::remove(path.c_str());
}
