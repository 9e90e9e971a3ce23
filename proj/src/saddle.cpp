#include "hdspa/saddle.hpp"

#include "hdspa/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>

namespace hdspa {

namespace {

struct IterateState {
  Vector tau;
  double residual;
  int iterations;
};

double residual_norm(const CgfModel& model, const Vector& tau, const Vector& a) {
  const double r = (model.grad(tau) - a).norm();
  return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

// Returns true on convergence; `state` holds the last accepted iterate either way.
bool newton(const CgfModel& model, const Vector& a, const SolverOptions& opts, IterateState& state) {
  constexpr double armijo_c = 1e-4;
  for (; state.iterations < opts.max_iter; ++state.iterations) {
    const Vector r = model.grad(state.tau) - a;
    state.residual = r.norm();
    if (state.residual <= opts.tol) return true;

    const Matrix l = cholesky_lower(model.hessian(state.tau), "saddle solve left the model domain");
    const Vector step = -l.transpose().triangularView<Eigen::Upper>().solve(
        l.triangularView<Eigen::Lower>().solve(r));

    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      const Vector trial = state.tau + lambda * step;
      const double rt = residual_norm(model, trial, a);
      if (rt * rt <= (1.0 - 2.0 * armijo_c * lambda) * state.residual * state.residual) {
        state.tau = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return false;
  }
  state.residual = residual_norm(model, state.tau, a);
  return state.residual <= opts.tol;
}

bool fixed_point(const CgfModel& model, const Vector& a, const SolverOptions& opts,
                 IterateState& state) {
  const Vector zero = Vector::Zero(model.dim());
  const Matrix h0 = model.hessian(zero);
  const Vector rhs = a - model.grad(zero);
  auto map = [&](const Vector& tau) -> Vector {
    return (h0 + model.fixed_point_matrix(tau)).partialPivLu().solve(rhs);
  };

  state.residual = residual_norm(model, state.tau, a);
  double omega = 1.0;
  for (int it = 0; it < opts.fixed_point_max_iter; ++it) {
    if (state.residual <= opts.tol) return true;
    const Vector image = map(state.tau);
    bool accepted = false;
    for (int h = 0; h < 20; ++h, omega *= 0.5) {
      const Vector trial = (1.0 - omega) * state.tau + omega * image;
      const double rt = residual_norm(model, trial, a);
      if (rt < state.residual) {
        state.tau = trial;
        state.residual = rt;
        accepted = true;
        break;
      }
    }
    ++state.iterations;
    if (!accepted) return state.residual <= opts.tol;
    omega = std::min(1.0, 2.0 * omega);
  }
  return state.residual <= opts.tol;
}

}  // namespace

SaddlePoint solve_saddle(const CgfModel& model, const Vector& a, const SolverOptions& opts) {
  require_dim(a, model.dim(), "solve_saddle");
  if (!(opts.tol > 0.0)) throw ArgumentError("solve_saddle: tol must be positive");
  if (!a.allFinite()) throw ArgumentError("solve_saddle: query point is not finite");

  IterateState state{a, std::numeric_limits<double>::infinity(), 0};
  SolveMethod method = SolveMethod::newton;
  bool ok = false;
  if (opts.policy != SolvePolicy::fixed_point_only) {
    ok = newton(model, a, opts, state);
  }
  if (!ok && opts.policy != SolvePolicy::newton_only) {
    method = SolveMethod::fixed_point;
    if (opts.policy == SolvePolicy::fixed_point_only) state.tau = a;
    ok = fixed_point(model, a, opts, state);
  }
  if (!ok) {
    throw NonConvergenceError("solve_saddle: no convergence, residual " +
                                  std::to_string(state.residual),
                              state.residual, state.iterations);
  }

  SaddlePoint sp;
  sp.a = a;
  sp.tau = state.tau;
  sp.hessian_chol = model.hessian_cholesky(sp.tau);
  sp.log_det_h = log_det_from_cholesky(sp.hessian_chol);
  sp.residual = state.residual;
  sp.iterations = state.iterations;
  sp.method = method;
  sp.tolerance = opts.tol;
  sp.phi_star = legendre(model, sp);
  return sp;
}

double legendre(const CgfModel& model, const SaddlePoint& saddle) {
  if (!(saddle.residual <= saddle.tolerance)) {
    throw PreconditionError("legendre: saddle point residual above tolerance");
  }
  return saddle.tau.dot(saddle.a) - model.cgf_real(saddle.tau);
}

double c3_ball(const CgfModel& model, const Vector& a) {
  require_dim(a, model.dim(), "c3_ball");
  return model.c3_ball(2.0 * a.norm());
}

LegendreGapReport legendre_gap_report(const CgfModel& model, const Vector& a,
                                      const SolverOptions& opts) {
  require_dim(a, model.dim(), "legendre_gap_report");
  const int d = model.dim();
  const Matrix h0 = model.hessian(Vector::Zero(d));
  if ((h0 - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) {
    throw PreconditionError("legendre_gap_report: model is not standardized (H(0) != I)");
  }
  LegendreGapReport rep;
  const double an = a.norm();
  const SaddlePoint sp = solve_saddle(model, a, opts);
  rep.gap = std::abs(sp.phi_star - 0.5 * an * an);
  rep.c3_ball = c3_ball(model, a);
  rep.bound = rep.c3_ball * an * an * an;
  rep.admissible = 2.0 * an * rep.c3_ball <= 1.0;
  return rep;
}

}  // namespace hdspa
