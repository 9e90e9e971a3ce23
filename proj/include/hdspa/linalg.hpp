#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>

namespace hdspa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Lower Cholesky factor; throws ModelDomainError when a pivot is not positive.
Matrix cholesky_lower(const Matrix& m, const char* what);

/// log det from a lower Cholesky factor.
double log_det_from_cholesky(const Matrix& lower);

/// Symmetric inverse square root S = M^{-1/2} of a symmetric positive definite M.
Matrix inverse_sqrt_spd(const Matrix& m);

/// Symmetric square root of a symmetric positive semidefinite M.
Matrix sqrt_spd(const Matrix& m);

bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

void require_dim(const Vector& v, Eigen::Index d, const char* what);

}  // namespace hdspa
