#pragma once

#include "hdspa/saddle.hpp"

namespace hdspa {

/// Saddlepoint density of the sample mean with the correction factor set to 1:
///
///     rho(a) ~ (n / 2 pi)^{d/2} det(H)^{-1/2} exp(-n phi*(a))
///
/// Carried in the log domain; `density` is 0 and `underflow` set when the
/// value is below the double range.
struct SpaEstimate {
  double log_density = 0.0;
  double density = 0.0;
  double log_prefactor = 0.0;  ///< (d/2) log(n / 2 pi) - log det(H) / 2
  double exponent = 0.0;       ///< -n phi*(a)
  long n = 0;
  int d = 0;
  bool underflow = false;
};

SpaEstimate spa_density(const SaddlePoint& saddle, long n);

/// Terms of the non-asymptotic bound on |I(a) - 1|, eps = d^2 / n:
///
///     exp(40 c4 eps^2) (c3^2 + c4) eps  +  exp(-d)  +  (e eps / kappa^2)^{d/2}
///
/// Each term is up to an unknown absolute constant; the numbers here carry
/// no constant.
struct ErrorBudget {
  static constexpr double kLocalRadius = 2.5;
  static constexpr const char* kConstantNote = "x C, C unknown";
  /// Above this eps the "eps sufficiently small" regime is not expected to hold.
  static constexpr double kEpsWarning = 0.25;

  double eps = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double kappa = 0.0;
  double r_const = kLocalRadius;
  double term_main = 0.0;
  double term_exp = 0.0;
  double term_tail = 0.0;
  double total = 0.0;
  bool eps_warning = false;
};

ErrorBudget error_bound(int d, long n, double c3, double c4, double kappa);

/// Endpoint bounds of the two tail integrals outside the local ball.
struct TailBounds {
  double exp_tail = 0.0;   ///< exp(-d) / sqrt(d)
  double poly_tail = 0.0;  ///< (e d^2 / (n kappa^2))^{d/2}
};

TailBounds tail_bound_terms(int d, long n, double kappa);

/// |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);
double log_sphere_area(int d);

/// Gamma(d) / Gamma(d/2). The log form is checked against the duplication
/// formula 2^{d-1} Gamma((d+1)/2) / sqrt(pi); a mismatch beyond 1e-10
/// relative throws std::logic_error.
double gamma_ratio(int d);
double log_gamma_ratio(int d);

}  // namespace hdspa
