#include "hdspa/model.hpp"

#include "hdspa/errors.hpp"
#include "hdspa/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace hdspa {

namespace {

constexpr double kPi = std::numbers::pi;

// Largest |alpha| the rank-one sups look at; both kernels are below 1e-30 there.
constexpr double kAlphaCap = 40.0;
constexpr int kSupGrid = 401;

double sech(double x) {
  const double ax = std::abs(x);
  const double e = std::exp(-ax);
  return 2.0 * e / (1.0 + e * e);
}

double wrap_phase(double x) {
  while (x > kPi) x -= 2.0 * kPi;
  while (x <= -kPi) x += 2.0 * kPi;
  return x;
}

template <typename F>
double golden_max(F&& f, double lo, double hi, double& argmax) {
  constexpr double g = 0.6180339887498949;
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-14 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    }
  }
  argmax = f1 > f2 ? x1 : x2;
  return std::max(f1, f2);
}

}  // namespace

// ---------------------------------------------------------------------------
// scalar helpers

double logcosh(double x) {
  const double ax = std::abs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

std::complex<double> complex_logcosh(std::complex<double> w) {
  if (w.real() < 0.0) w = -w;
  std::complex<double> v = w + std::log((1.0 + std::exp(-2.0 * w)) * 0.5);
  return {v.real(), wrap_phase(v.imag())};
}

std::complex<double> complex_sech(std::complex<double> w) {
  if (w.real() < 0.0) w = -w;
  const std::complex<double> e = std::exp(-w);
  return 2.0 * e / (1.0 + e * e);
}

double c3_kernel(double alpha, double beta) {
  const std::complex<double> w{alpha, beta};
  const std::complex<double> s = complex_sech(w);
  const std::complex<double> th = std::tanh(w);
  return std::abs(2.0 * (s * s * th).real());
}

double c4_kernel(double alpha, double beta) {
  const std::complex<double> w{alpha, beta};
  const std::complex<double> s2 = complex_sech(w) * complex_sech(w);
  return std::abs(2.0 * (s2 * (1.0 - 3.0 * s2)).real());
}

// ---------------------------------------------------------------------------
// CgfModel defaults

std::complex<double> CgfModel::log_mgf_ratio(const Vector& tau, const Vector& t) const {
  return cgf_complex(tau, t).value() - cgf_real(tau);
}

Matrix CgfModel::fixed_point_matrix(const Vector& tau) const {
  static const QuadratureRule rule = map_rule(gauss_legendre(16), 0.0, 1.0);
  Matrix acc = Matrix::Zero(dim(), dim());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    acc += rule.weights[k] * hessian(rule.nodes[k] * tau);
  }
  return acc - hessian(Vector::Zero(dim()));
}

double CgfModel::c3_ball(double radius) const {
  const int d = dim();
  std::mt19937_64 rng(0x5eedc3u);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  auto random_unit = [&] {
    Vector u(d);
    for (int i = 0; i < d; ++i) u(i) = normal(rng);
    return Vector(u / u.norm());
  };

  double best = 0.0;
  const int n_tau = radius > 0.0 ? 64 : 1;
  for (int k = 0; k < n_tau; ++k) {
    Vector tau = Vector::Zero(d);
    if (k > 0) tau = random_unit() * radius * std::pow(unif(rng), 1.0 / d);
    const double h = 1e-4 * std::max(1.0, tau.norm());
    for (int j = 0; j < 16 + d; ++j) {
      Vector u = j < d ? Vector(Vector::Unit(d, j)) : random_unit();
      const double up = u.dot(hessian(tau + h * u) * u);
      const double dn = u.dot(hessian(tau - h * u) * u);
      best = std::max(best, std::abs(up - dn) / (2.0 * h));
    }
  }
  return best;
}

Matrix CgfModel::hessian_cholesky(const Vector& tau) const {
  return cholesky_lower(hessian(tau), "hessian");
}

// ---------------------------------------------------------------------------
// MixtureParams

void MixtureParams::validate() const {
  if (mu.size() == 0) throw ArgumentError("mixture: dimension must be positive");
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
    throw ArgumentError("mixture: sigma must be d x d with d = len(mu)");
  }
  if (!mu.allFinite() || !sigma.allFinite()) throw ArgumentError("mixture: non-finite parameter");
  if (!is_symmetric(sigma)) throw ArgumentError("mixture: sigma is not symmetric");
  cholesky_lower(sigma, "mixture sigma");
}

MixtureParams standardized(const MixtureParams& p) {
  p.validate();
  const Matrix second_moment = p.sigma + p.mu * p.mu.transpose();
  const Matrix w = inverse_sqrt_spd(second_moment);
  MixtureParams out;
  out.mu = w * p.mu;
  out.sigma = w * p.sigma * w;
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  return out;
}

bool is_standardized(const MixtureParams& p, double tol) {
  const Matrix m = p.sigma + p.mu * p.mu.transpose();
  return (m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------
// MixtureModel

MixtureModel::MixtureModel(MixtureParams params, double domain_radius)
    : params_(std::move(params)), domain_radius_(domain_radius) {
  params_.validate();
  if (!(domain_radius_ > 0.0)) throw ArgumentError("mixture: domain radius must be positive");
  mu_norm_ = params_.mu.norm();
  const Matrix l = cholesky_lower(params_.sigma, "mixture sigma");
  mu_sigma_inv_mu_ = l.triangularView<Eigen::Lower>().solve(params_.mu).squaredNorm();
}

double MixtureModel::cgf_real(const Vector& tau) const {
  require_dim(tau, dim(), "cgf_real");
  return 0.5 * tau.dot(params_.sigma * tau) + logcosh(params_.mu.dot(tau));
}

ComplexCgfValue MixtureModel::cgf_complex(const Vector& tau, const Vector& t) const {
  require_dim(tau, dim(), "cgf_complex");
  require_dim(t, dim(), "cgf_complex");
  const double alpha = params_.mu.dot(tau);
  const double beta = params_.mu.dot(t);
  // cosh(i beta) = cos beta: zero or negative real means no principal log.
  if (alpha == 0.0 && std::cos(beta) <= 0.0) {
    throw BranchError("cgf_complex: cosh(alpha + i beta) is on the branch cut or zero");
  }
  const Vector st = params_.sigma * t;
  const std::complex<double> lc = complex_logcosh({alpha, beta});
  ComplexCgfValue out;
  out.re = 0.5 * (tau.dot(params_.sigma * tau) - t.dot(st)) + lc.real();
  out.im = tau.dot(st) + lc.imag();
  return out;
}

std::complex<double> MixtureModel::log_mgf_ratio(const Vector& tau, const Vector& t) const {
  require_dim(tau, dim(), "log_mgf_ratio");
  require_dim(t, dim(), "log_mgf_ratio");
  const double alpha = params_.mu.dot(tau);
  const double beta = params_.mu.dot(t);
  const double th = std::tanh(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const Vector st = params_.sigma * t;
  const double re = -0.5 * t.dot(st) + 0.5 * std::log(cb * cb + th * th * sb * sb);
  const double im = tau.dot(st) + std::atan2(th * sb, cb);
  return {re, im};
}

Vector MixtureModel::grad(const Vector& tau) const {
  require_dim(tau, dim(), "grad_cgf");
  return params_.sigma * tau + std::tanh(params_.mu.dot(tau)) * params_.mu;
}

Matrix MixtureModel::hessian(const Vector& tau) const {
  require_dim(tau, dim(), "hessian");
  const double s = sech(params_.mu.dot(tau));
  return params_.sigma + (s * s) * params_.mu * params_.mu.transpose();
}

double MixtureModel::ratio_magnitude(const Vector& tau, const Vector& t) const {
  require_dim(tau, dim(), "ratio_magnitude");
  require_dim(t, dim(), "ratio_magnitude");
  const double th = std::tanh(params_.mu.dot(tau));
  const double beta = params_.mu.dot(t);
  const double cb = std::cos(beta), sb = std::sin(beta);
  // (cosh 2a + cos 2b) / (2 cosh^2 a) = cos^2 b + tanh^2 a sin^2 b
  return std::exp(-0.5 * t.dot(params_.sigma * t)) * std::sqrt(cb * cb + th * th * sb * sb);
}

double MixtureModel::phase_arg(const Vector& tau, const Vector& t) const {
  require_dim(tau, dim(), "phase_arg");
  require_dim(t, dim(), "phase_arg");
  const double alpha = params_.mu.dot(tau);
  const double beta = params_.mu.dot(t);
  const double re = std::cos(beta);
  const double im = std::tanh(alpha) * std::sin(beta);
  if (re == 0.0 && im == 0.0) throw BranchError("phase_arg: argument of zero");
  return tau.dot(params_.sigma * t) + std::atan2(im, re);
}

double MixtureModel::scaled_mu_norm(double alpha) const {
  const double s = sech(alpha);
  return std::sqrt(mu_sigma_inv_mu_ / (1.0 + mu_sigma_inv_mu_ * s * s));
}

double MixtureModel::rank_one_sup(double tau_radius, double t_radius, int order) const {
  if (!(tau_radius >= 0.0) || !(t_radius >= 0.0) || !std::isfinite(t_radius)) {
    throw ArgumentError("c3_sup/c4_sup: radii must be finite and non-negative");
  }
  if (mu_norm_ == 0.0) return 0.0;
  const double alpha_max = std::min(kAlphaCap, mu_norm_ * tau_radius);

  // beta = u * |H^{-1/2} mu| * t_radius with u in [-1, 1].
  auto objective = [&](double alpha, double u) {
    const double m = scaled_mu_norm(alpha);
    const double beta = u * m * t_radius;
    const double k = order == 3 ? c3_kernel(alpha, beta) : c4_kernel(alpha, beta);
    return k * std::pow(m, order);
  };

  const int na = alpha_max > 0.0 ? kSupGrid : 1;
  const int nu = t_radius > 0.0 ? kSupGrid : 1;
  auto alpha_at = [&](int i) { return na == 1 ? 0.0 : -alpha_max + 2.0 * alpha_max * i / (na - 1); };
  auto u_at = [&](int j) { return nu == 1 ? 0.0 : -1.0 + 2.0 * j / (nu - 1); };

  double best = -1.0;
  int bi = 0, bj = 0;
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nu; ++j) {
      const double v = objective(alpha_at(i), u_at(j));
      if (v > best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  }

  double a = alpha_at(bi), u = u_at(bj);
  const double a_lo = alpha_at(std::max(bi - 1, 0)), a_hi = alpha_at(std::min(bi + 1, na - 1));
  const double u_lo = u_at(std::max(bj - 1, 0)), u_hi = u_at(std::min(bj + 1, nu - 1));
  for (int round = 0; round < 3; ++round) {
    if (a_hi > a_lo) {
      double arg = a;
      const double v = golden_max([&](double x) { return objective(x, u); }, a_lo, a_hi, arg);
      if (v > best) {
        best = v;
        a = arg;
      }
    }
    if (u_hi > u_lo) {
      double arg = u;
      const double v = golden_max([&](double y) { return objective(a, y); }, u_lo, u_hi, arg);
      if (v > best) {
        best = v;
        u = arg;
      }
    }
  }
  return best;
}

double MixtureModel::c3_sup(double tau_radius, double t_radius) const {
  return rank_one_sup(tau_radius, t_radius, 3);
}

double MixtureModel::c4_sup(double tau_radius, double t_radius) const {
  return rank_one_sup(tau_radius, t_radius, 4);
}

double MixtureModel::c3_ball(double radius) const {
  if (!(radius >= 0.0)) throw ArgumentError("c3_ball: radius must be non-negative");
  if (mu_norm_ == 0.0) return 0.0;
  // 2 sech^2 x tanh x increases on [0, atanh(1/sqrt 3)] and decreases after.
  const double peak = std::atanh(1.0 / std::sqrt(3.0));
  const double x = std::min(radius * mu_norm_, peak);
  const double s = sech(x);
  return 2.0 * s * s * std::tanh(x) * mu_norm_ * mu_norm_ * mu_norm_;
}

Matrix MixtureModel::fixed_point_matrix(const Vector& tau) const {
  require_dim(tau, dim(), "fixed_point_matrix");
  const double alpha = params_.mu.dot(tau);
  // int_0^1 sech^2(l alpha) dl - 1 = tanh(alpha)/alpha - 1
  double coeff;
  if (std::abs(alpha) < 1e-4) {
    const double a2 = alpha * alpha;
    coeff = -a2 / 3.0 + 2.0 * a2 * a2 / 15.0;
  } else {
    coeff = std::tanh(alpha) / alpha - 1.0;
  }
  return coeff * params_.mu * params_.mu.transpose();
}

}  // namespace hdspa
