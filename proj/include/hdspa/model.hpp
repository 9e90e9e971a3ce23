#pragma once

#include "hdspa/linalg.hpp"

#include <complex>
#include <limits>

namespace hdspa {

/// Real and imaginary parts of the complexified cgf at tau + i t.
///
/// `re` is log|mgf| and is even in t; `im` is the phase, odd in t. The phase
/// uses the principal argument of the non-Gaussian factor, so it is the
/// branch that is continuous through t = 0.
struct ComplexCgfValue {
  double re = 0.0;
  double im = 0.0;

  std::complex<double> value() const { return {re, im}; }
};

/// Capability set every cumulant generating function model provides.
///
/// All methods are const and the model is immutable, so one instance can be
/// shared freely between threads.
class CgfModel {
 public:
  virtual ~CgfModel() = default;

  virtual int dim() const = 0;
  virtual double cgf_real(const Vector& tau) const = 0;
  /// Throws BranchError when the mgf vanishes or sits on the branch cut.
  virtual ComplexCgfValue cgf_complex(const Vector& tau, const Vector& t) const = 0;
  virtual Vector grad(const Vector& tau) const = 0;
  virtual Matrix hessian(const Vector& tau) const = 0;

  /// Sup of the third t-derivative norm of the phase over |tau| <= tau_radius
  /// and |t| <= t_radius, with t in H^{-1/2}-scaled coordinates.
  virtual double c3_sup(double tau_radius, double t_radius) const = 0;
  /// Same for the fourth t-derivative of log-modulus.
  virtual double c4_sup(double tau_radius, double t_radius) const = 0;

  /// log(mgf(tau + i t) / mgf(tau)) on any branch; never throws and returns
  /// -inf real part at zeros of the mgf. Only exp() of this is meaningful
  /// away from t = 0.
  virtual std::complex<double> log_mgf_ratio(const Vector& tau, const Vector& t) const;

  /// sup over |tau| <= radius of the operator norm of the real third derivative.
  /// The default is a sampled finite-difference estimate.
  virtual double c3_ball(double radius) const;

  /// B(tau) = int_0^1 (1 - l) D^3 cgf(l tau)[tau] dl = int_0^1 H(l tau) dl - H(0),
  /// so that grad(tau) = grad(0) + (H(0) + B(tau)) tau. Default: 16-node
  /// Gauss-Legendre in l.
  virtual Matrix fixed_point_matrix(const Vector& tau) const;

  /// Radius of the declared domain V_d (a ball around the origin).
  virtual double domain_radius() const { return std::numeric_limits<double>::infinity(); }

  /// Cholesky factor of hessian(tau); throws ModelDomainError if not SPD.
  Matrix hessian_cholesky(const Vector& tau) const;
};

/// Parameters of the symmetric mixture 1/2 N(mu, sigma) + 1/2 N(-mu, sigma).
struct MixtureParams {
  Vector mu;
  Matrix sigma;

  int dim() const { return static_cast<int>(mu.size()); }
  bool pure_gaussian() const { return mu.squaredNorm() == 0.0; }

  /// Throws ArgumentError on shape problems, ModelDomainError if sigma is not SPD.
  void validate() const;
};

/// Whitening X -> W X with W = (sigma + mu mu^T)^{-1/2}, so that E XX^T = I.
MixtureParams standardized(const MixtureParams& p);
bool is_standardized(const MixtureParams& p, double tol = 1e-10);

double logcosh(double x);
/// Principal-branch log cosh, overflow-free for large |Re w|.
std::complex<double> complex_logcosh(std::complex<double> w);
std::complex<double> complex_sech(std::complex<double> w);

/// |2 Re[sech^2 w tanh w]|, w = alpha + i beta.
double c3_kernel(double alpha, double beta);
/// |2 Re[sech^2 w (1 - 3 sech^2 w)]|.
double c4_kernel(double alpha, double beta);

class MixtureModel final : public CgfModel {
 public:
  explicit MixtureModel(MixtureParams params,
                        double domain_radius = std::numeric_limits<double>::infinity());

  const MixtureParams& params() const { return params_; }
  bool pure_gaussian() const { return params_.pure_gaussian(); }

  int dim() const override { return params_.dim(); }
  double cgf_real(const Vector& tau) const override;
  ComplexCgfValue cgf_complex(const Vector& tau, const Vector& t) const override;
  std::complex<double> log_mgf_ratio(const Vector& tau, const Vector& t) const override;
  Vector grad(const Vector& tau) const override;
  Matrix hessian(const Vector& tau) const override;
  double c3_sup(double tau_radius, double t_radius) const override;
  double c4_sup(double tau_radius, double t_radius) const override;
  double c3_ball(double radius) const override;
  Matrix fixed_point_matrix(const Vector& tau) const override;
  double domain_radius() const override { return domain_radius_; }

  /// |mgf(tau + i t) / mgf(tau)|, always <= exp(-<t, sigma t> / 2).
  double ratio_magnitude(const Vector& tau, const Vector& t) const;
  /// <tau, sigma t> + Arg(cosh a cos b + i sinh a sin b).
  double phase_arg(const Vector& tau, const Vector& t) const;

  /// ||H(tau)^{-1/2} mu|| as a function of alpha = <mu, tau> only.
  double scaled_mu_norm(double alpha) const;

 private:
  double rank_one_sup(double tau_radius, double t_radius, int order) const;

  MixtureParams params_;
  double domain_radius_;
  double mu_norm_;
  double mu_sigma_inv_mu_;
};

}  // namespace hdspa
