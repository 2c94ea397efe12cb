#include "sfm/matkit.hpp"

#include <cmath>
#include <string>

namespace sfm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::OutOfNeighborhood: return "OutOfNeighborhood";
    case ErrorCode::CutLocus: return "CutLocus";
    case ErrorCode::ScaleTooLarge: return "ScaleTooLarge";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularSystem:
    case ErrorCode::RankDeficient:
    case ErrorCode::OutOfNeighborhood:
    case ErrorCode::CutLocus:
    case ErrorCode::ScaleTooLarge:
      return true;
    default:
      return false;
  }
}

namespace matkit {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidMatrix, std::string(what) + " has non-finite entries");
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must be square, got " +
                                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

ThinSvd thin_svd(const Matrix& m) {
  require_finite(m, "thin_svd input");
  ThinSvd out;
  if (m.size() == 0) {
    const Eigen::Index k = std::min(m.rows(), m.cols());
    out.u = Matrix::Zero(m.rows(), k);
    out.s = Vector::Zero(k);
    out.v = Matrix::Zero(m.cols(), k);
    return out;
  }
  // BDCSVD switches to one-sided Jacobi below its block size, so small
  // problems keep Jacobi accuracy.
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = svd.matrixU();
  out.s = svd.singularValues();
  out.v = svd.matrixV();
  for (Eigen::Index j = 0; j < out.v.cols(); ++j) {
    Eigen::Index imax = 0;
    out.v.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.v(imax, j) < 0) {
      out.v.col(j) *= -1.0;
      out.u.col(j) *= -1.0;
    }
  }
  return out;
}

double rcond(const Matrix& a) {
  require_square(a, "rcond input");
  if (a.size() == 0) return 1.0;
  if (!a.allFinite()) return 0.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  const Matrix& lu_m = lu.matrixLU();
  for (Eigen::Index i = 0; i < lu_m.rows(); ++i) {
    if (lu_m(i, i) == 0.0) return 0.0;
  }
  return lu.rcond();
}

Matrix solve_linear(const Matrix& a, const Matrix& b, double min_rcond) {
  require_square(a, "solve_linear lhs");
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "solve_linear: lhs has " + std::to_string(a.rows()) +
                                              " rows, rhs has " + std::to_string(b.rows()));
  }
  require_finite(a, "solve_linear lhs");
  require_finite(b, "solve_linear rhs");
  if (a.size() == 0) return b;
  Eigen::PartialPivLU<Matrix> lu(a);
  const Matrix& lu_m = lu.matrixLU();
  bool exact_zero = false;
  for (Eigen::Index i = 0; i < lu_m.rows(); ++i) exact_zero = exact_zero || lu_m(i, i) == 0.0;
  const double rc = exact_zero ? 0.0 : lu.rcond();
  if (!(rc >= min_rcond)) {
    throw Error(ErrorCode::SingularSystem, "reciprocal condition " + std::to_string(rc) + " below " +
                                               std::to_string(min_rcond));
  }
  return lu.solve(b);
}

Matrix skew_part(const Matrix& m) {
  require_square(m, "skew_part input");
  return 0.5 * (m.transpose() - m);
}

Matrix orthonormalize(const Matrix& m, double rank_tol) {
  require_finite(m, "orthonormalize input");
  if (m.rows() < m.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "orthonormalize needs rows >= cols");
  }
  const Eigen::Index n = m.rows();
  const Eigen::Index p = m.cols();
  Eigen::HouseholderQR<Matrix> qr(m);
  const Matrix r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double scale = m.norm();
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(std::abs(r(j, j)) > rank_tol * scale)) {
      throw Error(ErrorCode::RankDeficient, "column " + std::to_string(j) + " is linearly dependent");
    }
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

double orthonormality_error(const Matrix& m) {
  return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).norm();
}

}  // namespace matkit
}  // namespace sfm
