#include "hdspa/errors.hpp"
#include "hdspa/model.hpp"
#include "hdspa/model_io.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace hdspa;
using namespace testing;

TEST_SUITE("model") {

TEST_CASE("cgf_real reference values") {
  CHECK(MixtureModel(unit_mixture(5)).cgf_real(Vector::Zero(5)) == 0.0);
  CHECK(MixtureModel(scalar_mixture(0, 1)).cgf_real(Vector::Constant(1, 2.0)) ==
        doctest::Approx(2.0).epsilon(1e-15));
  const MixtureParams p = scalar_mixture(1, 1);
  const double v = MixtureModel(p).cgf_real(Vector::Constant(1, 1.0));
  CHECK(v == doctest::Approx(double(direct_cgf(p, Vector::Constant(1, 1.0)))).epsilon(1e-15));
  CHECK(v == doctest::Approx(0.9337808).epsilon(1e-7));
}

TEST_CASE("cgf_real agrees with the mgf and survives large arguments") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const int d = 1 + k % 5;
    const MixtureParams p = random_mixture(rng, d, 2.0);
    const Vector tau = random_vector(rng, d);
    CHECK(MixtureModel(p).cgf_real(tau) == doctest::Approx(double(direct_cgf(p, tau))).epsilon(1e-12));
  }
  const double big = MixtureModel(scalar_mixture(1, 1)).cgf_real(Vector::Constant(1, 800.0));
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(0.5 * 800 * 800 + 800 - std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("cgf_complex reference values") {
  const MixtureParams p = scalar_mixture(1, 1);
  const MixtureModel m(p);
  const Vector tau = Vector::Constant(1, 1.0);

  const ComplexCgfValue at0 = m.cgf_complex(tau, Vector::Zero(1));
  CHECK(at0.re == doctest::Approx(m.cgf_real(tau)).epsilon(1e-15));
  CHECK(at0.im == 0.0);

  const ComplexCgfValue z = m.cgf_complex(tau, Vector::Constant(1, 0.3));
  const std::complex<long double> lc = std::log(std::cosh(std::complex<long double>(1.0L, 0.3L)));
  CHECK(z.re == doctest::Approx(double(0.5L * (1 - 0.09L) + lc.real())).epsilon(1e-14));
  CHECK(z.im == doctest::Approx(double(0.3L + lc.imag())).epsilon(1e-14));

  const MixtureModel m2(unit_mixture(3));
  for (double b : {-1.5, -0.4, 0.0, 0.9, 1.5}) {
    Vector t = Vector::Zero(3);
    t(0) = b;
    t(2) = 0.7;
    CHECK(m2.cgf_complex(Vector::Zero(3), t).im == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("cgf_complex matches the principal log of the mgf near the real axis") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const int d = 1 + k % 4;
    const MixtureParams p = random_mixture(rng, d);
    const Vector tau = random_vector(rng, d, 0.5);
    const Vector t = random_vector(rng, d, 0.2);
    const auto ref = direct_complex_cgf(p, tau, t);
    const ComplexCgfValue z = MixtureModel(p).cgf_complex(tau, t);
    CHECK(z.re == doctest::Approx(double(ref.real())).epsilon(1e-12));
    // principal log of the whole mgf wraps where Im leaves (-pi, pi]
    const double dim = std::remainder(z.im - double(ref.imag()), 2 * M_PI);
    CHECK(std::abs(dim) < 1e-11);
  }
}

TEST_CASE("cgf_complex parity: re even and im odd in t") {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 100; ++k) {
    const int d = 1 + k % 4;
    const MixtureModel m(random_mixture(rng, d));
    const Vector tau = random_vector(rng, d, 0.7);
    const Vector t = random_vector(rng, d, 0.5);
    const auto plus = m.cgf_complex(tau, t);
    const auto minus = m.cgf_complex(tau, -t);
    CHECK(plus.re == doctest::Approx(minus.re).epsilon(1e-13));
    CHECK(plus.im == doctest::Approx(-minus.im).epsilon(1e-13).scale(1e-14));
  }
}

TEST_CASE("cgf_complex refuses the branch point") {
  const MixtureModel m(scalar_mixture(1, 1));
  CHECK_THROWS_AS(m.cgf_complex(Vector::Zero(1), Vector::Constant(1, 2.0)), BranchError);
  CHECK_THROWS_AS(m.cgf_complex(Vector::Zero(2), Vector::Zero(1)), ArgumentError);
}

TEST_CASE("grad reference values") {
  const MixtureModel m(unit_mixture(4));
  CHECK(m.grad(Vector::Zero(4)).norm() == 0.0);
  std::mt19937_64 rng(14);
  const Matrix s = random_spd(rng, 3);
  const Vector tau = random_vector(rng, 3);
  const MixtureModel g({Vector::Zero(3), s});
  CHECK((g.grad(tau) - s * tau).norm() < 1e-14);

  Vector mu(2);
  mu << 1, 0;
  const MixtureModel m2({mu, Matrix::Identity(2, 2)});
  const Vector gr = m2.grad(Vector::Ones(2));
  CHECK(gr(0) == doctest::Approx(1.0 + std::tanh(1.0)).epsilon(1e-15));
  CHECK(gr(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::tanh(1.0) == doctest::Approx(0.7615941).epsilon(1e-7));
}

TEST_CASE("hessian reference values") {
  std::mt19937_64 rng(15);
  const MixtureParams p = random_mixture(rng, 3);
  const MixtureModel m(p);
  const Matrix h0 = m.hessian(Vector::Zero(3));
  CHECK((h0 - (p.sigma + p.mu * p.mu.transpose())).norm() < 1e-14);
  CHECK((MixtureModel({Vector::Zero(3), p.sigma}).hessian(random_vector(rng, 3)) - p.sigma).norm() < 1e-15);
  const double h = MixtureModel(scalar_mixture(1, 1)).hessian(Vector::Constant(1, 1.0))(0, 0);
  const double sech1 = 1.0 / std::cosh(1.0);
  CHECK(h == doctest::Approx(1.0 + sech1 * sech1).epsilon(1e-15));
  CHECK(h == doctest::Approx(1.4199743).epsilon(1e-7));
}

TEST_CASE("grad and hessian match finite differences") {
  std::mt19937_64 rng(16);
  for (int k = 0; k < 40; ++k) {
    const int d = 1 + k % 6;
    const MixtureModel m(random_mixture(rng, d, 1.5));
    const Vector tau = random_vector(rng, d, 0.8);
    const double h = 1e-5;
    const Vector g = m.grad(tau);
    const Matrix hess = m.hessian(tau);
    CHECK(is_symmetric(hess));
    CHECK(hess.llt().info() == Eigen::Success);
    for (int i = 0; i < d; ++i) {
      const Vector e = Vector::Unit(d, i);
      const double fd = (m.cgf_real(tau + h * e) - m.cgf_real(tau - h * e)) / (2 * h);
      CHECK(g(i) == doctest::Approx(fd).epsilon(1e-7).scale(1.0));
      const Vector fdh = (m.grad(tau + h * e) - m.grad(tau - h * e)) / (2 * h);
      CHECK((hess.col(i) - fdh).norm() < 1e-7 * (1 + hess.norm()));
    }
  }
}

TEST_CASE("hessian eigenvalues interlace with those of sigma") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 30; ++k) {
    const int d = 2 + k % 5;
    const MixtureParams p = random_mixture(rng, d, 2.0);
    const MixtureModel m(p);
    const Vector tau = random_vector(rng, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.hessian(tau)), ss(p.sigma);
    const Vector lh = es.eigenvalues(), ls = ss.eigenvalues();
    for (int i = 0; i < d; ++i) CHECK(lh(i) >= ls(i) - 1e-12);
    for (int i = 0; i + 1 < d; ++i) CHECK(lh(i) <= ls(i + 1) + 1e-12);
  }
}

TEST_CASE("ratio_magnitude and phase_arg") {
  const MixtureModel m(scalar_mixture(1, 1));
  const Vector one = Vector::Constant(1, 1.0);
  CHECK(m.ratio_magnitude(one, Vector::Zero(1)) == 1.0);
  CHECK(m.ratio_magnitude(Vector::Zero(1), Vector::Constant(1, M_PI / 2)) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(m.phase_arg(one, Vector::Zero(1)) == 0.0);
  CHECK(m.phase_arg(Vector::Zero(1), Vector::Constant(1, 1.2)) == 0.0);
  const double want = 0.3 + std::atan2(std::sinh(1.0) * std::sin(0.3), std::cosh(1.0) * std::cos(0.3));
  CHECK(m.phase_arg(one, Vector::Constant(1, 0.3)) == doctest::Approx(want).epsilon(1e-14));

  std::mt19937_64 rng(18);
  const Matrix s = random_spd(rng, 3);
  const Vector t = random_vector(rng, 3);
  const MixtureModel g({Vector::Zero(3), s});
  CHECK(g.ratio_magnitude(random_vector(rng, 3), t) ==
        doctest::Approx(std::exp(-0.5 * t.dot(s * t))).epsilon(1e-14));

  for (int k = 0; k < 100; ++k) {
    const int d = 1 + k % 4;
    const MixtureParams p = random_mixture(rng, d, 2.0);
    const MixtureModel mm(p);
    const Vector tau = random_vector(rng, d);
    const Vector tt = random_vector(rng, d, 2.0);
    const auto ref = direct_complex_cgf(p, tau, tt) - direct_cgf(p, tau);
    CHECK(mm.ratio_magnitude(tau, tt) == doctest::Approx(double(std::exp(ref.real()))).epsilon(1e-11));
    CHECK(std::abs(mm.log_mgf_ratio(tau, tt).real() - double(ref.real())) < 1e-11);
    CHECK(std::abs(std::remainder(mm.log_mgf_ratio(tau, tt).imag() - double(ref.imag()), 2 * M_PI)) < 1e-10);
  }
}

TEST_CASE("c3 and c4 kernels") {
  const double c3_peak = golden_max([](double a) { return c3_kernel(a, 0.0); }, 0.0, 3.0);
  CHECK(c3_peak == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))).epsilon(1e-10));
  CHECK(c3_peak == doctest::Approx(0.7698003).epsilon(1e-7));
  CHECK(c3_kernel(0.0, 0.0) == 0.0);
  CHECK(c4_kernel(0.0, 0.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(golden_max([](double a) { return c4_kernel(a, 0.0); }, -2.0, 2.0) == doctest::Approx(4.0).epsilon(1e-9));
  // against complex-arithmetic formulas for the derivatives of logcosh
  for (double a : {-1.1, 0.2, 0.7}) {
    for (double b : {-0.4, 0.1, 0.5}) {
      const std::complex<double> w(a, b);
      const std::complex<double> s = 1.0 / std::cosh(w);
      CHECK(c3_kernel(a, b) == doctest::Approx(std::abs(2.0 * (s * s * std::tanh(w)).real())).epsilon(1e-12));
      CHECK(c4_kernel(a, b) == doctest::Approx(std::abs(2.0 * (s * s * (1.0 - 3.0 * s * s)).real())).epsilon(1e-12));
    }
  }
}

// Brute-force sup of |d^k/ds^k| of the matching part of logcosh(mu (tau + i s))
// in the metric of H(tau), d = 1.
double brute_sup_1d(double mu, double sigma, double tau_r, double t_r, int order) {
  double best = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double tau = -tau_r + 2 * tau_r * i / 400.0;
    const double sech = 1.0 / std::cosh(mu * tau);
    const double h = sigma + mu * mu * sech * sech;
    for (int j = 0; j <= 400; ++j) {
      const double t = (-t_r + 2 * t_r * j / 400.0) / std::sqrt(h);
      const std::complex<double> w(mu * tau, mu * t);
      const std::complex<double> s = 1.0 / std::cosh(w);
      const double k = order == 3 ? 2.0 * (s * s * std::tanh(w)).real()
                                  : 2.0 * (s * s * (1.0 - 3.0 * s * s)).real();
      best = std::max(best, std::abs(k) * std::pow(mu * mu / h, order / 2.0));
    }
  }
  return best;
}

TEST_CASE("c3_sup and c4_sup") {
  CHECK(MixtureModel({Vector::Zero(3), Matrix::Identity(3, 3)}).c3_sup(1.0, 1.0) == 0.0);
  CHECK(MixtureModel({Vector::Zero(3), Matrix::Identity(3, 3)}).c4_sup(1.0, 1.0) == 0.0);
  for (auto [mu, sigma] : {std::pair{1.0, 1.0}, std::pair{0.6, 0.64}, std::pair{2.0, 0.5}}) {
    const MixtureModel m(scalar_mixture(mu, sigma));
    for (auto [tr, trr] : {std::pair{0.0, 0.0}, std::pair{0.5, 0.2}, std::pair{3.0, 1.0}}) {
      CHECK(m.c3_sup(tr, trr) == doctest::Approx(brute_sup_1d(mu, sigma, tr, trr, 3)).epsilon(2e-3));
      CHECK(m.c3_sup(tr, trr) >= brute_sup_1d(mu, sigma, tr, trr, 3) * (1 - 1e-9));
      CHECK(m.c4_sup(tr, trr) == doctest::Approx(brute_sup_1d(mu, sigma, tr, trr, 4)).epsilon(2e-3));
      CHECK(m.c4_sup(tr, trr) >= brute_sup_1d(mu, sigma, tr, trr, 4) * (1 - 1e-9));
    }
  }
  const MixtureModel m(scalar_mixture(1, 1));
  CHECK(m.c3_sup(0.5, 0.1) <= m.c3_sup(1.0, 0.1) + 1e-15);
  CHECK(m.c4_sup(0.5, 0.1) <= m.c4_sup(0.5, 0.4) + 1e-15);
  CHECK_THROWS_AS(m.c3_sup(-1.0, 0.1), ArgumentError);
}

TEST_CASE("mixture params validation and standardization") {
  MixtureParams bad{Vector::Ones(2), Matrix::Identity(2, 2)};
  bad.sigma(1, 1) = -1.0;
  CHECK_THROWS_AS(bad.validate(), ModelDomainError);
  MixtureParams asym{Vector::Ones(2), Matrix::Identity(2, 2)};
  asym.sigma(0, 1) = 0.5;
  CHECK_THROWS(asym.validate());
  CHECK_THROWS(MixtureParams({Vector::Ones(3), Matrix::Identity(2, 2)}).validate());

  std::mt19937_64 rng(19);
  const MixtureParams p = random_mixture(rng, 4, 1.5);
  CHECK_FALSE(is_standardized(p));
  const MixtureParams s = standardized(p);
  CHECK(is_standardized(s));
  CHECK((MixtureModel(s).hessian(Vector::Zero(4)) - Matrix::Identity(4, 4)).norm() < 1e-12);
  CHECK(is_standardized(scalar_mixture(0.6, 0.64)));
}

TEST_CASE("model spec files") {
  const ModelSpec spec = parse_model_spec("# comment\nmu = unit*2\nsigma = diag 1, 2, 3\n");
  const MixtureParams p = spec.instantiate(3);
  CHECK(p.mu.norm() == doctest::Approx(2.0));
  CHECK(p.mu(0) == doctest::Approx(p.mu(2)));
  CHECK(p.sigma(1, 1) == 2.0);
  CHECK(p.sigma(0, 1) == 0.0);
  CHECK_THROWS_AS(spec.instantiate(), ArgumentError);

  const MixtureParams lit = parse_model_spec("mu = [1, 0]\nsigma = [[2, 0.5], [0.5, 1]]").instantiate();
  CHECK(lit.dim() == 2);
  CHECK(lit.sigma(0, 1) == 0.5);
  CHECK(lit.sigma(1, 0) == 0.5);

  const MixtureParams e1 = parse_model_spec("mu = e1*0.5\nsigma = identity*2\nstandardize = true").instantiate(2);
  CHECK(is_standardized(e1));

  CHECK_THROWS_AS(parse_model_spec("mu = 1\nmu = 2"), ArgumentError);
  CHECK_THROWS_AS(parse_model_spec("colour = red"), ArgumentError);
  CHECK_THROWS_AS(parse_model_spec("d = 2\nmu = 1, 2, 3").instantiate(), ArgumentError);
}

}
