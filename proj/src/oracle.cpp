#include "hdspa/oracle.hpp"

#include "hdspa/errors.hpp"
#include "hdspa/quadrature.hpp"
#include "hdspa/saddle.hpp"
#include "hdspa/spa.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>

namespace hdspa {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  std::vector<double> terms(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) terms[i] = std::exp(xs[i] - m);
  return m + std::log(pairwise_sum<double>(terms));
}
}  // namespace

ExactMeanDensity::ExactMeanDensity(MixtureParams params, long n)
    : params_(std::move(params)), n_(n) {
  params_.validate();
  if (n_ < 1) throw ArgumentError("exact_mean_density: n must be >= 1");
  const double nd = static_cast<double>(n_);
  chol_ = cholesky_lower(params_.sigma / nd, "exact_mean_density");
  whitened_mu_ = chol_.triangularView<Eigen::Lower>().solve(params_.mu);
  log_norm_ = -0.5 * params_.dim() * kLog2Pi - 0.5 * log_det_from_cholesky(chol_);
  if (!params_.pure_gaussian()) {
    log_weights_.resize(n_ + 1);
    const double lgn = std::lgamma(nd + 1.0);
    for (long k = 0; k <= n_; ++k) {
      log_weights_[k] = lgn - std::lgamma(k + 1.0) - std::lgamma(nd - k + 1.0) -
                        nd * std::numbers::ln2;
    }
  } else {
    log_weights_.assign(1, 0.0);
  }
}

double ExactMeanDensity::log_density(const Vector& a) const {
  require_dim(a, params_.dim(), "exact_mean_density");
  const Vector w = chol_.triangularView<Eigen::Lower>().solve(a);
  if (params_.pure_gaussian()) return log_norm_ - 0.5 * w.squaredNorm();
  const double nd = static_cast<double>(n_);
  std::vector<double> terms(n_ + 1);
  for (long k = 0; k <= n_; ++k) {
    const double c = (2.0 * k - nd) / nd;
    terms[k] = log_weights_[k] - 0.5 * (w - c * whitened_mu_).squaredNorm();
  }
  return log_norm_ + log_sum_exp(terms);
}

double exact_mean_density(const MixtureParams& params, long n, const Vector& a) {
  return ExactMeanDensity(params, n).density(a);
}

void McOracleConfig::validate() const {
  if (samples < 10000) throw ArgumentError("McOracleConfig: samples must be >= 1e4");
  if (bootstrap < 2) throw ArgumentError("McOracleConfig: bootstrap must be >= 2");
  if (streams < 1) throw ArgumentError("McOracleConfig: streams must be >= 1");
  if (bandwidth_rule == BandwidthRule::fixed && !(fixed_bandwidth > 0.0)) {
    throw ArgumentError("McOracleConfig: fixed bandwidth must be positive");
  }
}

McEstimate mc_density(const MixtureParams& params, long n, const Vector& a,
                      const McOracleConfig& cfg) {
  params.validate();
  cfg.validate();
  const int d = params.dim();
  if (d > 4) throw ArgumentError("mc_density: kernel estimate limited to d <= 4");
  if (n < 1) throw ArgumentError("mc_density: n must be >= 1");
  require_dim(a, d, "mc_density");

  const Matrix chol = cholesky_lower(params.sigma / static_cast<double>(n), "mc_density");
  const long per_stream = (cfg.samples + cfg.streams - 1) / cfg.streams;

  // Stream s draws samples [s * per_stream, ...) with its own (seed, s) generator.
  auto simulate = [&](int stream) {
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(stream)};
    std::mt19937_64 rng(seq);
    std::binomial_distribution<long> binom(n, 0.5);
    std::normal_distribution<double> normal;
    const long begin = stream * per_stream;
    const long count = std::max(0L, std::min(cfg.samples, begin + per_stream) - begin);
    Matrix out(d, count);
    Vector z(d);
    for (long i = 0; i < count; ++i) {
      const double c = (2.0 * binom(rng) - n) / static_cast<double>(n);
      for (int j = 0; j < d; ++j) z(j) = normal(rng);
      out.col(i) = c * params.mu + chol * z;
    }
    return out;
  };
  std::vector<std::future<Matrix>> jobs;
  for (int s = 0; s < cfg.streams; ++s) jobs.push_back(std::async(std::launch::async, simulate, s));
  Matrix draws(d, cfg.samples);
  long filled = 0;
  for (auto& job : jobs) {
    const Matrix part = job.get();
    draws.middleCols(filled, part.cols()) = part;
    filled += part.cols();
  }

  Vector h(d);
  if (cfg.bandwidth_rule == BandwidthRule::fixed) {
    h.setConstant(cfg.fixed_bandwidth);
  } else {
    const double factor = std::pow(static_cast<double>(cfg.samples), -1.0 / (d + 4));
    for (int j = 0; j < d; ++j) {
      const double mean = draws.row(j).mean();
      const double var = (draws.row(j).array() - mean).square().sum() / (cfg.samples - 1);
      h(j) = std::sqrt(var) * factor;
    }
  }

  std::vector<double> kernel(cfg.samples);
  const double log_h = h.array().log().sum();
  for (long i = 0; i < cfg.samples; ++i) {
    const double q = ((a - draws.col(i)).array() / h.array()).square().sum();
    kernel[i] = std::exp(-0.5 * q - 0.5 * d * kLog2Pi - log_h);
  }

  McEstimate est;
  est.estimate = pairwise_sum<double>(kernel) / cfg.samples;

  std::seed_seq boot_seq{cfg.seed, static_cast<std::uint64_t>(cfg.streams), std::uint64_t{0xb007}};
  std::mt19937_64 rng(boot_seq);
  std::uniform_int_distribution<long> pick(0, cfg.samples - 1);
  std::vector<double> means(cfg.bootstrap);
  for (int b = 0; b < cfg.bootstrap; ++b) {
    double s = 0.0;
    for (long i = 0; i < cfg.samples; ++i) s += kernel[pick(rng)];
    means[b] = s / cfg.samples;
  }
  const double mb = pairwise_sum<double>(means) / cfg.bootstrap;
  double ss = 0.0;
  for (double m : means) ss += (m - mb) * (m - mb);
  est.std_error = std::sqrt(ss / (cfg.bootstrap - 1));
  return est;
}

double standard_gaussian_log_density(const Vector& x) {
  return -0.5 * x.size() * kLog2Pi - 0.5 * x.squaredNorm();
}

CltRatio clt_ratio(const MixtureParams& params, long n, const Vector& x, double kappa) {
  params.validate();
  if (!is_standardized(params)) {
    throw PreconditionError("clt_ratio: model must satisfy sigma + mu mu^T = I");
  }
  if (n < 1) throw ArgumentError("clt_ratio: n must be >= 1");
  const int d = params.dim();
  require_dim(x, d, "clt_ratio");

  const double nd = static_cast<double>(n);
  const Vector a = x / std::sqrt(nd);
  CltRatio out;
  if (params.pure_gaussian()) {
    out.ratio = 1.0;
  } else {
    const ExactMeanDensity exact(params, n);
    const double log_ratio =
        exact.log_density(a) - 0.5 * d * std::log(nd) - standard_gaussian_log_density(x);
    out.ratio = std::exp(log_ratio);
  }

  const MixtureModel model(params);
  const double xn = x.norm();
  const double t_radius = ErrorBudget::kLocalRadius * std::sqrt(d / nd);
  out.c3_ball = c3_ball(model, a);
  const ErrorBudget budget = error_bound(d, n, model.c3_sup(2.0 * a.norm(), t_radius),
                                         model.c4_sup(2.0 * a.norm(), t_radius), kappa);
  out.budget_total = budget.total;
  out.bound = out.c3_ball * xn * xn * xn / std::sqrt(nd) + budget.total;
  return out;
}

}  // namespace hdspa
