#include "hdspa/linalg.hpp"

#include "hdspa/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace hdspa {

Matrix cholesky_lower(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ModelDomainError(std::string(what) + ": Cholesky factorization failed");
  }
  Matrix lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) {
      throw ModelDomainError(std::string(what) + ": non-positive Cholesky pivot");
    }
  }
  return lower;
}

double log_det_from_cholesky(const Matrix& lower) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i) s += std::log(lower(i, i));
  return 2.0 * s;
}

Matrix inverse_sqrt_spd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw ModelDomainError("inverse_sqrt_spd: matrix is not positive definite");
  }
  return es.operatorInverseSqrt();
}

Matrix sqrt_spd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < 0.0) {
    throw ModelDomainError("sqrt_spd: matrix is not positive semidefinite");
  }
  return es.operatorSqrt();
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_dim(const Vector& v, Eigen::Index d, const char* what) {
  if (v.size() != d) {
    throw ArgumentError(std::string(what) + ": expected dimension " + std::to_string(d) +
                        ", got " + std::to_string(v.size()));
  }
}

}  // namespace hdspa
