#pragma once

// Dense-matrix kernels shared by the geometry modules. Everything here is a
// pure function over Eigen value types.

#include <Eigen/Dense>

#include "sfm/errors.hpp"

namespace sfm::matkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thin SVD m = u * diag(s) * v^T with k = min(rows, cols).
///
/// Singular values are descending. Each singular pair is sign-normalized so
/// that the largest-magnitude entry of the v column is positive, which makes
/// the factorization deterministic for distinct singular values.
struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

ThinSvd thin_svd(const Matrix& m);

/// Solves a * x = b. Throws SingularSystem when the reciprocal condition
/// estimate of a falls below `min_rcond`.
Matrix solve_linear(const Matrix& a, const Matrix& b, double min_rcond = 1e-12);

/// Reciprocal condition number estimate (1-norm) of a square matrix; 0 for
/// exactly singular input.
double rcond(const Matrix& a);

/// sk(m) = (m^T - m) / 2.
Matrix skew_part(const Matrix& m);

/// Q factor of a Householder QR with the triangular factor's diagonal made
/// positive. Throws RankDeficient if a diagonal entry of R is below
/// `rank_tol * ||m||_F`.
Matrix orthonormalize(const Matrix& m, double rank_tol = 1e-12);

/// ||m^T m - I||_F.
double orthonormality_error(const Matrix& m);

bool all_finite(const Matrix& m);

void require_finite(const Matrix& m, const char* what);
void require_square(const Matrix& m, const char* what);

}  // namespace sfm::matkit
