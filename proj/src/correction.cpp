#include "hdspa/correction.hpp"

#include "hdspa/errors.hpp"
#include "hdspa/quadrature.hpp"
#include "hdspa/spa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace hdspa {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::complex<double> kI{0.0, 1.0};

QuadratureRule unit_rule(QuadRuleKind kind, int nodes) {
  const QuadratureRule base = kind == QuadRuleKind::gauss_legendre ? gauss_legendre(nodes)
                                                                    : trapezoid(nodes);
  return map_rule(base, 0.0, 1.0);
}

// Shell level of a 1-d panel [j w, (j+1) w]: the cube half-width (in panels)
// at which it first appears.
int panel_level(int j) { return std::max(-j, j + 1); }

struct PanelSums {
  std::complex<double> fine;
  std::complex<double> coarse;
  double max_modulus = 0.0;
  long nodes = 0;
};

}  // namespace

void QuadSpec::validate() const {
  if (nodes_per_axis < 16) throw ArgumentError("QuadSpec: nodes_per_axis must be >= 16");
  if (!(trunc_radius >= 2.5)) throw ArgumentError("QuadSpec: trunc_radius must be >= 2.5");
  if (!(kappa > 0.0)) throw ArgumentError("QuadSpec: kappa must be positive");
  if (!(magnitude_floor > 0.0)) throw ArgumentError("QuadSpec: magnitude_floor must be positive");
  if (max_shells < 1) throw ArgumentError("QuadSpec: max_shells must be positive");
}

std::complex<double> g_function(const CgfModel& model, const SaddlePoint& saddle, const Vector& t) {
  require_dim(t, model.dim(), "g_function");
  const Matrix scale = inverse_sqrt_spd(model.hessian(saddle.tau));
  const Vector s = scale * t;
  const std::complex<double> phi_z = model.cgf_complex(saddle.tau, s).value();
  return -phi_z + model.cgf_real(saddle.tau) + kI * s.dot(saddle.a);
}

CorrectionResult correction_integral(const CgfModel& model, const SaddlePoint& saddle, long n,
                                     const QuadSpec& spec) {
  spec.validate();
  const int d = model.dim();
  if (d > 3) throw ArgumentError("correction_integral: tensor quadrature is limited to d <= 3");
  if (n < 1) throw ArgumentError("correction_integral: n must be >= 1");
  require_dim(saddle.tau, d, "correction_integral");

  const double nd = static_cast<double>(n);
  const double width = std::sqrt(d / nd);
  const double ball = spec.trunc_radius * width;
  const Matrix scale = inverse_sqrt_spd(model.hessian(saddle.tau));
  const double phi_tau = model.cgf_real(saddle.tau);

  auto integrand = [&](const Vector& t) -> std::complex<double> {
    const Vector s = scale * t;
    std::complex<double> log_ratio;
    if (t.norm() <= ball) {
      try {
        log_ratio = model.cgf_complex(saddle.tau, s).value() - phi_tau;
      } catch (const BranchError& e) {
        throw AssumptionViolation(std::string("correction_integral: phase condition fails in the "
                                              "local ball: ") + e.what());
      }
    } else {
      log_ratio = model.log_mgf_ratio(saddle.tau, s);
    }
    const std::complex<double> g = -log_ratio + kI * s.dot(saddle.a);
    return std::exp(-nd * g);
  };

  const int coarse_nodes = spec.rule == QuadRuleKind::gauss_legendre
                               ? spec.nodes_per_axis / 2
                               : (spec.nodes_per_axis + 1) / 2;
  const QuadratureRule fine = unit_rule(spec.rule, spec.nodes_per_axis);
  const QuadratureRule coarse = unit_rule(spec.rule, coarse_nodes);

  auto integrate_panel = [&](const std::array<int, 3>& idx) {
    PanelSums out;
    auto run = [&](const QuadratureRule& rule, bool track, std::complex<double>& acc) {
      const int m = static_cast<int>(rule.nodes.size());
      std::array<int, 3> k{0, 0, 0};
      Vector t(d);
      const int total = static_cast<int>(std::pow(m, d));
      for (int flat = 0; flat < total; ++flat) {
        int rem = flat;
        double w = 1.0;
        for (int ax = 0; ax < d; ++ax) {
          k[ax] = rem % m;
          rem /= m;
          t(ax) = (idx[ax] + rule.nodes[k[ax]]) * width;
          w *= rule.weights[k[ax]] * width;
        }
        const std::complex<double> f = integrand(t);
        acc += w * f;
        if (track) out.max_modulus = std::max(out.max_modulus, std::abs(f));
        ++out.nodes;
      }
    };
    run(fine, true, out.fine);
    run(coarse, false, out.coarse);
    return out;
  };

  std::vector<std::complex<double>> fine_parts, coarse_parts;
  long nodes = 0;
  const int first_level = std::max(1, static_cast<int>(std::ceil(spec.trunc_radius - 1e-12)));
  int level = first_level;
  for (;; ++level) {
    if (level > spec.max_shells) {
      throw QuadratureError("correction_integral: integrand did not decay within max_shells");
    }
    double shell_max = 0.0;
    std::array<int, 3> idx{0, 0, 0};
    const int span = 2 * level;
    const int total = static_cast<int>(std::pow(span, d));
    for (int flat = 0; flat < total; ++flat) {
      int rem = flat;
      int lvl = 0;
      for (int ax = 0; ax < d; ++ax) {
        idx[ax] = rem % span - level;
        rem /= span;
        lvl = std::max(lvl, panel_level(idx[ax]));
      }
      const bool wanted = level == first_level ? lvl <= level : lvl == level;
      if (!wanted) continue;
      const PanelSums p = integrate_panel(idx);
      fine_parts.push_back(p.fine);
      coarse_parts.push_back(p.coarse);
      nodes += p.nodes;
      if (lvl == level) shell_max = std::max(shell_max, p.max_modulus);
    }
    if (shell_max < spec.magnitude_floor) break;
  }

  const double norm = std::pow(nd / (2.0 * kPi), 0.5 * d);
  CorrectionResult res;
  res.i_value = norm * pairwise_sum<std::complex<double>>(fine_parts);
  const std::complex<double> i_coarse = norm * pairwise_sum<std::complex<double>>(coarse_parts);
  res.refine_gap = std::abs(res.i_value - i_coarse);
  res.abs_err_from_one = std::abs(res.i_value - 1.0);
  res.nodes_used = nodes;
  res.half_width = level * width;
  const TailBounds tails = tail_bound_terms(d, n, spec.kappa);
  res.tail_estimate = tails.exp_tail + tails.poly_tail;
  if (!(res.refine_gap <= spec.refine_tol)) {
    throw QuadratureError("correction_integral: refinement disagreement " +
                          std::to_string(res.refine_gap));
  }
  return res;
}

AssumptionReport check_assumptions(const CgfModel& model, std::span<const Vector> tau_samples,
                                   long n, int sample_count, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("check_assumptions: n must be >= 1");
  if (sample_count < 3) throw ArgumentError("check_assumptions: need at least 3 samples");
  if (tau_samples.empty()) throw ArgumentError("check_assumptions: no tau samples");
  const int d = model.dim();
  const double sd = std::sqrt(static_cast<double>(d));
  const double scale = std::sqrt(d / static_cast<double>(n));
  const double ball = 2.5 * scale;
  const double shell_hi = 50.0 * scale;
  constexpr double far_hi = 1e3;

  std::seed_seq seq{seed, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(n)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  auto random_unit = [&] {
    Vector u(d);
    do {
      for (int i = 0; i < d; ++i) u(i) = normal(rng);
    } while (u.norm() == 0.0);
    return Vector(u / u.norm());
  };

  // (|t|, log ratio) for every sample outside the ball that fails the exp branch.
  std::vector<std::pair<double, double>> poly_constrained;
  std::vector<std::pair<double, double>> outer;

  AssumptionReport rep;
  rep.delta_arg = kPi;
  rep.delta_mod = std::numeric_limits<double>::infinity();
  rep.t_min = std::numeric_limits<double>::infinity();

  const int n_ball = sample_count / 3;
  const int n_shell = sample_count / 3;
  const int n_far = sample_count - n_ball - n_shell;

  for (const Vector& tau : tau_samples) {
    require_dim(tau, d, "check_assumptions");
    const Matrix h_inv_sqrt = inverse_sqrt_spd(model.hessian(tau));
    const double phi_tau = model.cgf_real(tau);

    for (int k = 0; k < n_ball; ++k) {
      const Vector t = random_unit() * ball * std::pow(unif(rng), 1.0 / d);
      const Vector s = h_inv_sqrt * t;
      ++rep.samples;
      try {
        const ComplexCgfValue v = model.cgf_complex(tau, s);
        const double arg = std::arg(std::polar(1.0, v.im));
        rep.delta_arg = std::min(rep.delta_arg, kPi - std::abs(arg));
        rep.delta_mod = std::min(rep.delta_mod, std::exp(v.re - phi_tau));
      } catch (const BranchError&) {
        rep.delta_arg = 0.0;
        rep.delta_mod = 0.0;
      }
    }

    auto outer_sample = [&](double radius) {
      const Vector t = random_unit() * radius;
      const double log_ratio = model.log_mgf_ratio(tau, h_inv_sqrt * t).real();
      ++rep.samples;
      rep.t_min = std::min(rep.t_min, radius);
      rep.t_max = std::max(rep.t_max, radius);
      outer.emplace_back(radius, log_ratio);
      if (!(log_ratio <= -scale * radius)) {
        ++rep.exp_branch_violations;
        poly_constrained.emplace_back(radius, log_ratio);
      }
    };
    for (int k = 0; k < n_shell; ++k) outer_sample(ball + (shell_hi - ball) * unif(rng));
    if (shell_hi < far_hi) {
      for (int k = 0; k < n_far; ++k) {
        outer_sample(shell_hi * std::pow(far_hi / shell_hi, unif(rng)));
      }
    }
  }

  auto valid = [&](double kappa) {
    for (const auto& [r, lr] : poly_constrained) {
      if (!(lr <= -(kappa / sd) * std::log1p(r))) return false;
    }
    return true;
  };

  if (valid(AssumptionReport::kKappaCap)) {
    rep.kappa_est = AssumptionReport::kKappaCap;
  } else if (!valid(0.0)) {
    rep.kappa_est = 0.0;
  } else {
    double lo = 0.0, hi = AssumptionReport::kKappaCap;
    while (hi - lo > 1e-3 * std::max(lo, 1e-6)) {
      const double mid = 0.5 * (lo + hi);
      (valid(mid) ? lo : hi) = mid;
    }
    rep.kappa_est = lo;
  }
  rep.gaussian_dominated = rep.exp_branch_violations == 0;

  for (const auto& [r, lr] : outer) {
    const double bound = std::max(-scale * r, -(rep.kappa_est / sd) * std::log1p(r));
    if (!(lr <= bound)) ++rep.magnitude_violations;
  }
  if (outer.empty()) rep.t_min = 0.0;
  if (n_ball == 0) rep.delta_mod = 0.0;
  return rep;
}

}  // namespace hdspa
