#pragma once

#include "hdspa/model.hpp"

namespace hdspa {

enum class SolveMethod { newton, fixed_point };

/// Which iterations solve_saddle may use.
enum class SolvePolicy {
  automatic,         ///< Newton, falling back to the fixed-point map on stagnation
  newton_only,
  fixed_point_only,
};

struct SolverOptions {
  double tol = 1e-12;            ///< on ||grad(tau) - a||
  int max_iter = 100;            ///< Newton iterations
  int max_halvings = 30;         ///< Armijo step halvings per Newton step
  int fixed_point_max_iter = 1000;
  SolvePolicy policy = SolvePolicy::automatic;
};

/// Solution of grad cgf(tau) = a and the quantities the SPA needs from it.
struct SaddlePoint {
  Vector a;
  Vector tau;
  double phi_star = 0.0;   ///< Legendre transform <tau, a> - cgf(tau)
  Matrix hessian_chol;     ///< lower factor of H(tau)
  double log_det_h = 0.0;
  double residual = 0.0;
  int iterations = 0;
  SolveMethod method = SolveMethod::newton;
  double tolerance = 0.0;  ///< tolerance the solve was run with
};

/// Newton with Armijo backtracking from tau0 = a; on stagnation switches to
/// the damped map tau <- (H(0) + B(tau))^{-1} (a - grad(0)).
///
/// Throws NonConvergenceError (carrying the last residual) when the caps are
/// hit, and ModelDomainError when H(tau) stops being positive definite.
SaddlePoint solve_saddle(const CgfModel& model, const Vector& a, const SolverOptions& opts = {});

/// <tau, a> - cgf(tau); requires saddle.residual <= saddle.tolerance.
double legendre(const CgfModel& model, const SaddlePoint& saddle);

/// C3(a) = sup_{|tau| <= 2|a|} ||D^3 cgf(tau)||.
double c3_ball(const CgfModel& model, const Vector& a);

struct LegendreGapReport {
  double gap = 0.0;      ///< |phi*(a) - |a|^2 / 2|
  double c3_ball = 0.0;  ///< C3(a)
  double bound = 0.0;    ///< C3(a) |a|^3, constant not included
  bool admissible = false;  ///< 2 |a| C3(a) <= 1
};

/// Needs a standardized model (H(0) = I); throws PreconditionError otherwise.
LegendreGapReport legendre_gap_report(const CgfModel& model, const Vector& a,
                                      const SolverOptions& opts = {});

}  // namespace hdspa
