#include "krongp/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "krongp/mathutil.hpp"

namespace krongp {

namespace {

constexpr double kDivergenceThreshold = 1000.0;

struct DualAveraging {
  double mu = 0.0, h_bar = 0.0, log_eps = 0.0, log_eps_bar = 0.0;
  int count = 0;
  double target = 0.8;
  static constexpr double kGamma = 0.05, kT0 = 10.0, kKappa = 0.75;

  void restart(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = 0.0;
    h_bar = 0.0;
    count = 0;
  }
  double update(double accept) {
    ++count;
    const double w = 1.0 / (count + kT0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept);
    log_eps = mu - std::sqrt(static_cast<double>(count)) / kGamma * h_bar;
    const double wk = std::pow(count, -kKappa);
    log_eps_bar = wk * log_eps + (1.0 - wk) * log_eps_bar;
    return std::exp(log_eps);
  }
  double adapted() const { return std::exp(log_eps_bar); }
};

struct PhasePoint {
  Eigen::VectorXd theta, r, grad;
  double logp = 0.0;
};

double kinetic(const Eigen::VectorXd& r, const Eigen::VectorXd& inv_mass) {
  return 0.5 * r.dot(inv_mass.cwiseProduct(r));
}

struct Tree {
  PhasePoint minus, plus;
  Eigen::VectorXd theta_sample, grad_sample;
  double logp_sample = 0.0;
  double log_sum_weight = -std::numeric_limits<double>::infinity();
  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  bool turning = false;
};

bool uturn(const PhasePoint& minus, const PhasePoint& plus, const Eigen::VectorXd& inv_mass) {
  const Eigen::VectorXd dtheta = plus.theta - minus.theta;
  return dtheta.dot(inv_mass.cwiseProduct(minus.r)) <= 0.0 ||
         dtheta.dot(inv_mass.cwiseProduct(plus.r)) <= 0.0;
}

class ChainRunner {
 public:
  ChainRunner(const LogDensityGrad& target, Eigen::Index dim, const SamplerSettings& s, int chain,
              const DrawSink& sink, ChainStats& stats)
      : target_(target), dim_(dim), settings_(s), chain_(chain), sink_(sink), stats_(stats),
        rng_(s.seed + static_cast<std::uint64_t>(chain)), unif_(0.0, 1.0), normal_(0.0, 1.0),
        inv_mass_(Eigen::VectorXd::Ones(dim)) {}

  void run() {
    initialize();
    eps_ = find_initial_step_size();
    da_.target = settings_.target_accept;
    da_.restart(eps_);

    // Warmup: step-size phase, variance-estimation window, then a short
    // re-adaptation phase under the new metric.
    const int warmup = settings_.warmup;
    const int fast1 = std::max(1, warmup * 15 / 100);
    const int term = std::max(1, warmup * 10 / 100);
    const int slow_end = std::max(fast1 + 1, warmup - term);

    Eigen::VectorXd welford_mean = Eigen::VectorXd::Zero(dim_);
    Eigen::VectorXd welford_m2 = Eigen::VectorXd::Zero(dim_);
    long welford_n = 0;

    for (int it = 0; it < warmup; ++it) {
      const double accept = transition();
      eps_ = da_.update(accept);
      if (it >= fast1 && it < slow_end) {
        ++welford_n;
        const Eigen::VectorXd delta = current_.theta - welford_mean;
        welford_mean += delta / static_cast<double>(welford_n);
        welford_m2 += delta.cwiseProduct(current_.theta - welford_mean);
      }
      if (it == slow_end - 1 && welford_n > 1) {
        Eigen::VectorXd var = welford_m2 / static_cast<double>(welford_n - 1);
        const double nn = static_cast<double>(welford_n);
        var = (nn / (nn + 5.0)) * var.array() + 5e-3 * (5.0 / (nn + 5.0));
        inv_mass_ = var.cwiseMax(1e-10);
        eps_ = std::max(1e-10, da_.adapted());
        da_.restart(eps_);
      }
    }
    eps_ = std::max(1e-10, da_.adapted());
    stats_.step_size = eps_;

    stats_.divergences = 0;  // report post-warmup divergences only
    for (int it = 0; it < settings_.samples; ++it) {
      transition();
      sink_(chain_, it, current_.theta);
    }
  }

 private:
  void initialize() {
    for (int attempt = 0; attempt < 100; ++attempt) {
      Eigen::VectorXd theta(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i)
        theta(i) = settings_.init_scale * (2.0 * unif_(rng_) - 1.0);
      Eigen::VectorXd grad(dim_);
      const double logp = target_(theta, grad);
      if (std::isfinite(logp) && grad.allFinite()) {
        current_ = {theta, Eigen::VectorXd::Zero(dim_), grad, logp};
        return;
      }
    }
    throw std::runtime_error("nuts: failed to find a valid initial point in 100 attempts");
  }

  double find_initial_step_size() {
    double eps = 1.0;
    PhasePoint z = current_;
    sample_momentum(z.r);
    const double h0 = -z.logp + kinetic(z.r, inv_mass_);
    auto h_after_step = [&](double e) {
      PhasePoint p = z;
      leapfrog(target_, inv_mass_, e, p.theta, p.r, p.grad, p.logp);
      return -p.logp + kinetic(p.r, inv_mass_);
    };
    double h = h_after_step(eps);
    if (!std::isfinite(h)) {
      while (!std::isfinite(h) && eps > 1e-10) {
        eps *= 0.5;
        h = h_after_step(eps);
      }
      return eps;
    }
    const double dir = (h0 - h > std::log(0.5)) ? 1.0 : -1.0;
    for (int i = 0; i < 100; ++i) {
      if (dir > 0 && !(h0 - h > std::log(0.5))) break;
      if (dir < 0 && !(h0 - h < std::log(0.5))) break;
      eps *= dir > 0 ? 2.0 : 0.5;
      if (eps > 1e7 || eps < 1e-10) break;
      h = h_after_step(eps);
      if (!std::isfinite(h)) {
        eps *= 0.5;
        break;
      }
    }
    return eps;
  }

  void sample_momentum(Eigen::VectorXd& r) {
    r.resize(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) r(i) = normal_(rng_) / std::sqrt(inv_mass_(i));
  }

  Tree leaf(const PhasePoint& from, double direction, double h0) {
    Tree t;
    PhasePoint p = from;
    leapfrog(target_, inv_mass_, direction * eps_, p.theta, p.r, p.grad, p.logp);
    const double h = -p.logp + kinetic(p.r, inv_mass_);
    t.n_leapfrog = 1;
    const double delta = h0 - h;
    if (!std::isfinite(h) || -delta > kDivergenceThreshold) {
      t.divergent = true;
      t.sum_accept = 0.0;
    } else {
      t.log_sum_weight = delta;
      t.sum_accept = std::min(1.0, std::exp(delta));
    }
    t.minus = p;
    t.plus = p;
    t.theta_sample = p.theta;
    t.grad_sample = p.grad;
    t.logp_sample = p.logp;
    return t;
  }

  Tree build_tree(int depth, const PhasePoint& from, double direction, double h0) {
    if (depth == 0) return leaf(from, direction, h0);
    Tree t1 = build_tree(depth - 1, from, direction, h0);
    if (t1.divergent || t1.turning) return t1;
    const PhasePoint& edge = direction > 0 ? t1.plus : t1.minus;
    Tree t2 = build_tree(depth - 1, edge, direction, h0);

    Tree t;
    t.n_leapfrog = t1.n_leapfrog + t2.n_leapfrog;
    t.sum_accept = t1.sum_accept + t2.sum_accept;
    t.divergent = t2.divergent;
    t.log_sum_weight = log_sum_exp(t1.log_sum_weight, t2.log_sum_weight);
    if (unif_(rng_) < std::exp(t2.log_sum_weight - t.log_sum_weight)) {
      t.theta_sample = t2.theta_sample;
      t.grad_sample = t2.grad_sample;
      t.logp_sample = t2.logp_sample;
    } else {
      t.theta_sample = t1.theta_sample;
      t.grad_sample = t1.grad_sample;
      t.logp_sample = t1.logp_sample;
    }
    t.minus = direction > 0 ? t1.minus : t2.minus;
    t.plus = direction > 0 ? t2.plus : t1.plus;
    t.turning = t2.turning || uturn(t.minus, t.plus, inv_mass_);
    return t;
  }

  /// One NUTS transition; returns the averaged acceptance statistic.
  double transition() {
    PhasePoint z = current_;
    sample_momentum(z.r);
    const double h0 = -z.logp + kinetic(z.r, inv_mass_);

    PhasePoint minus = z, plus = z;
    Eigen::VectorXd sample_theta = z.theta, sample_grad = z.grad;
    double sample_logp = z.logp;
    double log_sum_weight = 0.0;  // weight 1 for the initial point
    double sum_accept = 0.0;
    int n_leapfrog = 0;
    int depth = 0;
    bool diverged = false;

    for (; depth < settings_.max_tree_depth; ++depth) {
      const double direction = unif_(rng_) < 0.5 ? 1.0 : -1.0;
      Tree sub = build_tree(depth, direction > 0 ? plus : minus, direction, h0);
      sum_accept += sub.sum_accept;
      n_leapfrog += sub.n_leapfrog;
      if (sub.divergent) {
        diverged = true;
        break;
      }
      if (sub.turning) break;
      // Biased progressive sampling: favour the new subtree.
      if (std::log(unif_(rng_)) < sub.log_sum_weight - log_sum_weight) {
        sample_theta = sub.theta_sample;
        sample_grad = sub.grad_sample;
        sample_logp = sub.logp_sample;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, sub.log_sum_weight);
      if (direction > 0)
        plus = sub.plus;
      else
        minus = sub.minus;
      if (uturn(minus, plus, inv_mass_)) {
        ++depth;
        break;
      }
    }
    if (diverged) ++stats_.divergences;
    stats_.tree_depths.push_back(depth);
    current_.theta = sample_theta;
    current_.grad = sample_grad;
    current_.logp = sample_logp;
    return n_leapfrog > 0 ? sum_accept / n_leapfrog : 0.0;
  }

  const LogDensityGrad& target_;
  Eigen::Index dim_;
  const SamplerSettings& settings_;
  int chain_;
  const DrawSink& sink_;
  ChainStats& stats_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unif_;
  std::normal_distribution<double> normal_;
  Eigen::VectorXd inv_mass_;
  PhasePoint current_;
  double eps_ = 1.0;
  DualAveraging da_;
};

}  // namespace

void SamplerSettings::validate() const {
  if (chains < 1 || warmup < 1 || samples < 1) throw std::invalid_argument("sampler counts must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("target_accept must be in (0,1)");
  if (max_tree_depth < 1) throw std::invalid_argument("max_tree_depth must be >= 1");
}

void leapfrog(const LogDensityGrad& target, const Eigen::VectorXd& inv_mass, double eps,
              Eigen::VectorXd& theta, Eigen::VectorXd& momentum, Eigen::VectorXd& grad,
              double& logp) {
  momentum += 0.5 * eps * grad;
  theta += eps * inv_mass.cwiseProduct(momentum);
  logp = target(theta, grad);
  momentum += 0.5 * eps * grad;
}

NutsResult nuts_sample(const LogDensityGrad& target, Eigen::Index dim,
                       const SamplerSettings& settings, const DrawSink& sink) {
  settings.validate();
  NutsResult result;
  result.chains.resize(settings.chains);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int max_threads = settings.threads > 0 ? settings.threads : static_cast<int>(hw);
  std::exception_ptr error;

  auto run_chain = [&](int c) {
    try {
      ChainRunner runner(target, dim, settings, c, sink, result.chains[c]);
      runner.run();
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  };

  if (max_threads <= 1 || settings.chains == 1) {
    for (int c = 0; c < settings.chains; ++c) run_chain(c);
  } else {
    for (int c0 = 0; c0 < settings.chains; c0 += max_threads) {
      std::vector<std::thread> pool;
      for (int c = c0; c < std::min(settings.chains, c0 + max_threads); ++c)
        pool.emplace_back(run_chain, c);
      for (auto& t : pool) t.join();
    }
  }
  if (error) std::rethrow_exception(error);
  return result;
}

NutsResult nuts_sample_collect(const LogDensityGrad& target, Eigen::Index dim,
                               const SamplerSettings& settings,
                               std::vector<Eigen::MatrixXd>& draws) {
  draws.assign(settings.chains, Eigen::MatrixXd(settings.samples, dim));
  auto sink = [&draws](int chain, int it, const Eigen::VectorXd& x) {
    draws[chain].row(it) = x;
  };
  return nuts_sample(target, dim, settings, sink);
}

}  // namespace krongp
