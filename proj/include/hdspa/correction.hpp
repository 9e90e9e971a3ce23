#pragma once

#include "hdspa/saddle.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace hdspa {

enum class QuadRuleKind { trapezoid, gauss_legendre };

/// Tensor-product panel quadrature for the correction factor.
///
/// Panels have width (d/n)^{1/2} in t. Integration starts on the cube of
/// half-width trunc_radius (d/n)^{1/2} and grows one shell of panels at a
/// time until the largest integrand modulus on the new shell is below
/// magnitude_floor.
struct QuadSpec {
  int nodes_per_axis = 16;   ///< nodes per panel per axis
  double trunc_radius = 2.5; ///< in units of (d/n)^{1/2}
  QuadRuleKind rule = QuadRuleKind::gauss_legendre;
  double kappa = 1.0;        ///< only used for the reported tail estimate
  double magnitude_floor = 1e-16;
  double refine_tol = 1e-6;  ///< allowed gap between the rule and its half-order companion
  int max_shells = 400;

  void validate() const;
};

struct CorrectionResult {
  std::complex<double> i_value;
  double abs_err_from_one = 0.0;  ///< |i_value - 1|
  double tail_estimate = 0.0;     ///< endpoint tail bounds, constant not included
  long nodes_used = 0;
  double refine_gap = 0.0;        ///< |I - I_coarse|
  double half_width = 0.0;        ///< final cube half-width in t
};

/// I(a) = (n / 2 pi)^{d/2} int exp(-n G(t)) dt for d <= 3.
///
/// Inside the local ball |t| <= trunc_radius (d/n)^{1/2} the principal-branch
/// cgf is used and a branch failure throws AssumptionViolation. Outside it
/// only exp(-n G) is needed, which does not depend on the branch.
CorrectionResult correction_integral(const CgfModel& model, const SaddlePoint& saddle, long n,
                                     const QuadSpec& spec = {});

/// G(t) = -cgf(tau + i H^{-1/2} t) + cgf(tau) + i <H^{-1/2} t, a>.
std::complex<double> g_function(const CgfModel& model, const SaddlePoint& saddle, const Vector& t);

struct AssumptionReport {
  double kappa_est = 0.0;       ///< largest validated kappa (capped at kKappaCap)
  double delta_arg = 0.0;       ///< min pi - |Arg mgf| on the local ball
  double delta_mod = 0.0;       ///< min |mgf(tau + i H^{-1/2} t)| / mgf(tau) on the ball
  long magnitude_violations = 0;  ///< samples failing the decay bound with kappa_est
  long exp_branch_violations = 0; ///< samples where exp(-(d/n)^{1/2}|t|) alone fails
  long samples = 0;
  bool gaussian_dominated = false;  ///< exp branch held on every outer sample
  double t_min = 0.0;           ///< sampled |t| range outside the ball
  double t_max = 0.0;

  static constexpr double kKappaCap = 1e3;
};

/// Samples t in the local ball, on shells 2.5..50 (d/n)^{1/2}, and on a
/// log-spaced far field up to |t| = 1e3, for every tau in `tau_samples`.
AssumptionReport check_assumptions(const CgfModel& model, std::span<const Vector> tau_samples,
                                   long n, int sample_count, std::uint64_t seed);

}  // namespace hdspa
