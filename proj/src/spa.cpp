#include "hdspa/spa.hpp"

#include "hdspa/errors.hpp"

#include <cmath>
#include <numbers>

namespace hdspa {

namespace {
constexpr double kPi = std::numbers::pi;
// exp() of anything below this is zero in double precision.
constexpr double kLogUnderflow = -745.0;

void require_positive_dim(int d, const char* what) {
  if (d < 1) throw ArgumentError(std::string(what) + ": d must be >= 1");
}
}  // namespace

SpaEstimate spa_density(const SaddlePoint& saddle, long n) {
  if (n < 1) throw ArgumentError("spa_density: n must be >= 1");
  SpaEstimate est;
  est.n = n;
  est.d = static_cast<int>(saddle.tau.size());
  est.log_prefactor = 0.5 * est.d * std::log(static_cast<double>(n) / (2.0 * kPi)) -
                      0.5 * saddle.log_det_h;
  est.exponent = -static_cast<double>(n) * saddle.phi_star;
  est.log_density = est.log_prefactor + est.exponent;
  est.underflow = est.log_density < kLogUnderflow;
  est.density = est.underflow ? 0.0 : std::exp(est.log_density);
  return est;
}

ErrorBudget error_bound(int d, long n, double c3, double c4, double kappa) {
  require_positive_dim(d, "error_bound");
  if (n < 1) throw ArgumentError("error_bound: n must be >= 1");
  if (!(kappa > 0.0)) throw ArgumentError("error_bound: kappa must be positive");
  if (c3 < 0.0 || c4 < 0.0) throw ArgumentError("error_bound: c3, c4 must be non-negative");
  ErrorBudget b;
  b.eps = static_cast<double>(d) * d / static_cast<double>(n);
  b.c3 = c3;
  b.c4 = c4;
  b.kappa = kappa;
  b.term_main = std::exp(40.0 * c4 * b.eps * b.eps) * (c3 * c3 + c4) * b.eps;
  b.term_exp = std::exp(-static_cast<double>(d));
  b.term_tail = std::exp(0.5 * d * std::log(std::numbers::e * b.eps / (kappa * kappa)));
  b.total = b.term_main + b.term_exp + b.term_tail;
  b.eps_warning = b.eps > ErrorBudget::kEpsWarning;
  return b;
}

TailBounds tail_bound_terms(int d, long n, double kappa) {
  require_positive_dim(d, "tail_bound_terms");
  if (n < 1) throw ArgumentError("tail_bound_terms: n must be >= 1");
  if (!(kappa > 0.0)) throw ArgumentError("tail_bound_terms: kappa must be positive");
  const double dd = d;
  TailBounds t;
  t.exp_tail = std::exp(-dd) / std::sqrt(dd);
  t.poly_tail = std::exp(0.5 * dd * std::log(std::numbers::e * dd * dd / (n * kappa * kappa)));
  return t;
}

double log_sphere_area(int d) {
  require_positive_dim(d, "sphere_area");
  return std::log(2.0) + 0.5 * d * std::log(kPi) - std::lgamma(0.5 * d);
}

double sphere_area(int d) { return std::exp(log_sphere_area(d)); }

double log_gamma_ratio(int d) {
  require_positive_dim(d, "gamma_ratio");
  const double direct = std::lgamma(static_cast<double>(d)) - std::lgamma(0.5 * d);
  const double duplication =
      (d - 1) * std::log(2.0) + std::lgamma(0.5 * (d + 1)) - 0.5 * std::log(kPi);
  // Relative check on the ratio itself: |exp(direct - duplication) - 1|.
  if (std::abs(std::expm1(direct - duplication)) > 1e-10) {
    throw std::logic_error("gamma_ratio: duplication identity check failed");
  }
  return direct;
}

double gamma_ratio(int d) { return std::exp(log_gamma_ratio(d)); }

}  // namespace hdspa
