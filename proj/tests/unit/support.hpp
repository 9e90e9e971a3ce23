#pragma once

#include "hdspa/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <random>

namespace testing {

using hdspa::Matrix;
using hdspa::MixtureParams;
using hdspa::Vector;

inline Vector random_vector(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * normal(rng);
  return v;
}

inline Matrix random_spd(std::mt19937_64& rng, int d, double floor = 0.3) {
  std::normal_distribution<double> normal;
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = normal(rng) / std::sqrt(double(d));
  return a * a.transpose() + floor * Matrix::Identity(d, d);
}

inline MixtureParams random_mixture(std::mt19937_64& rng, int d, double mu_scale = 1.0) {
  return {random_vector(rng, d, mu_scale / std::sqrt(double(d))), random_spd(rng, d)};
}

inline MixtureParams scalar_mixture(double mu, double sigma) {
  return {Vector::Constant(1, mu), Matrix::Constant(1, 1, sigma)};
}

inline MixtureParams unit_mixture(int d) {
  Vector mu = Vector::Zero(d);
  mu(0) = 1.0;
  return {mu, Matrix::Identity(d, d)};
}

// Bisection root of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
template <typename F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Golden-section maximum of a unimodal f on [lo, hi].
template <typename F>
double golden_max(F f, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  for (int i = 0; i < 200; ++i) {
    if (f(c) > f(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - g * (hi - lo);
    d = lo + g * (hi - lo);
  }
  return f(0.5 * (lo + hi));
}

// Direct mixture cgf from the mgf, in long double.
inline long double direct_cgf(const MixtureParams& p, const Vector& tau) {
  long double q = 0, a = 0;
  for (int i = 0; i < p.dim(); ++i) {
    a += static_cast<long double>(p.mu(i)) * tau(i);
    for (int j = 0; j < p.dim(); ++j) q += static_cast<long double>(tau(i)) * p.sigma(i, j) * tau(j);
  }
  return 0.5L * q + std::log(std::cosh(a));
}

// log E exp((tau + i t) . X) computed as log of the mgf itself, principal branch.
inline std::complex<long double> direct_complex_cgf(const MixtureParams& p, const Vector& tau,
                                                    const Vector& t) {
  using C = std::complex<long double>;
  C q = 0, a = 0;
  for (int i = 0; i < p.dim(); ++i) {
    const C zi(tau(i), t(i));
    a += static_cast<long double>(p.mu(i)) * zi;
    for (int j = 0; j < p.dim(); ++j) q += zi * static_cast<long double>(p.sigma(i, j)) * C(tau(j), t(j));
  }
  return 0.5L * q + std::log(std::cosh(a));
}

// Gaussian density N(x; m, s) in d = 1.
inline double normal_pdf(double x, double m, double var) {
  return std::exp(-0.5 * (x - m) * (x - m) / var) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace testing
