#pragma once

#include "hdspa/model.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace hdspa {

/// Exact law of the mean of n draws from the symmetric mixture.
///
/// With k of the n signs positive the mean is N(((2k - n)/n) mu, sigma/n),
/// so the density is a Binomial(n, 1/2)-weighted sum of n + 1 Gaussians,
/// evaluated with log-sum-exp.
class ExactMeanDensity {
 public:
  ExactMeanDensity(MixtureParams params, long n);

  double log_density(const Vector& a) const;
  double density(const Vector& a) const { return std::exp(log_density(a)); }

  const MixtureParams& params() const { return params_; }
  long n() const { return n_; }
  std::span<const double> log_binom_weights() const { return log_weights_; }
  const Matrix& sigma_over_n_chol() const { return chol_; }

 private:
  MixtureParams params_;
  long n_;
  std::vector<double> log_weights_;
  Matrix chol_;          // lower factor of sigma / n
  Vector whitened_mu_;   // chol_^{-1} mu
  double log_norm_ = 0;  // -(d/2) log 2 pi - log det(chol_)
};

double exact_mean_density(const MixtureParams& params, long n, const Vector& a);

enum class BandwidthRule { fixed, scott };

struct McOracleConfig {
  long samples = 100000;
  std::uint64_t seed = 1;
  BandwidthRule bandwidth_rule = BandwidthRule::scott;
  double fixed_bandwidth = 0.05;  ///< per-axis bandwidth when the rule is `fixed`
  int bootstrap = 200;
  int streams = 8;                ///< independently seeded generator streams

  void validate() const;
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;  ///< bootstrap standard error
};

/// Product-Gaussian-kernel density estimate at `a` from simulated sample
/// means. Limited to d <= 4. Deterministic for a fixed config.
McEstimate mc_density(const MixtureParams& params, long n, const Vector& a,
                      const McOracleConfig& cfg = {});

double standard_gaussian_log_density(const Vector& x);

struct CltRatio {
  double ratio = 0.0;  ///< density of sqrt(n) * mean at x over the standard Gaussian
  double bound = 0.0;  ///< C3(a) |x|^3 / sqrt(n) + error_bound(...).total, no constants
  double c3_ball = 0.0;
  double budget_total = 0.0;
};

/// Needs sigma + mu mu^T = I (see `standardized`); throws PreconditionError
/// otherwise. kappa feeds the tail term of the budget.
CltRatio clt_ratio(const MixtureParams& params, long n, const Vector& x, double kappa = 1.0);

}  // namespace hdspa
