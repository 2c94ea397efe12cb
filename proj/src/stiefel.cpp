#include "sfm/stiefel.hpp"

#include <string>

namespace sfm::stiefel {

namespace {

void require_same_shape(const StiefelPoint& x, const StiefelPoint& y, const char* op) {
  if (x.n() != y.n() || x.p() != y.p()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": St(" + std::to_string(x.p()) + "," +
                                              std::to_string(x.n()) + ") vs St(" + std::to_string(y.p()) + "," +
                                              std::to_string(y.n()) + ")");
  }
}

void require_same_shape(const SkewLift& u, const SkewLift& v, const char* op) {
  if (u.n() != v.n() || u.p() != v.p()) throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": lift shapes differ");
}

}  // namespace

StiefelPoint::StiefelPoint(Matrix m) : x_(std::move(m)) {
  if (x_.cols() < 1 || x_.rows() < x_.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "Stiefel point needs n >= p >= 1, got " + std::to_string(x_.rows()) +
                                              "x" + std::to_string(x_.cols()));
  }
  matkit::require_finite(x_, "Stiefel point");
  const double drift = matkit::orthonormality_error(x_);
  if (drift <= kOrthoTol) return;
  if (drift <= kOrthoRepairLimit) {
    x_ = matkit::orthonormalize(x_);
    return;
  }
  throw Error(ErrorCode::NotOrthonormal, "||X^T X - I||_F = " + std::to_string(drift));
}

StiefelPoint StiefelPoint::origin(Eigen::Index n, Eigen::Index p) { return StiefelPoint(Matrix::Identity(n, p)); }

SkewLift::SkewLift(Matrix c, Matrix b) : c_(std::move(c)), b_(std::move(b)) {
  matkit::require_square(c_, "SkewLift C block");
  if (b_.cols() != c_.cols()) throw Error(ErrorCode::ShapeMismatch, "SkewLift blocks disagree on p");
  matkit::require_finite(c_, "SkewLift C block");
  matkit::require_finite(b_, "SkewLift B block");
  const double asym = (c_ + c_.transpose()).norm();
  if (asym > 1e-12 * (1.0 + c_.norm())) {
    throw Error(ErrorCode::InvalidMatrix, "SkewLift C block is not skew-symmetric");
  }
  c_ = (0.5 * (c_ - c_.transpose())).eval();
}

SkewLift SkewLift::zero(Eigen::Index n, Eigen::Index p) {
  return SkewLift(Matrix::Zero(p, p), Matrix::Zero(n - p, p), Trusted{});
}

Matrix SkewLift::full() const {
  const Eigen::Index nn = n();
  const Eigen::Index pp = p();
  Matrix w = Matrix::Zero(nn, nn);
  w.topLeftCorner(pp, pp) = c_;
  w.bottomLeftCorner(nn - pp, pp) = b_;
  w.topRightCorner(pp, nn - pp) = -b_.transpose();
  return w;
}

Vector SkewLift::flatten() const {
  Vector out(coordinate_count());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p(); ++i)
    for (Eigen::Index j = i + 1; j < p(); ++j) out(k++) = std::numbers::sqrt2 * c_(i, j);
  for (Eigen::Index j = 0; j < b_.cols(); ++j)
    for (Eigen::Index i = 0; i < b_.rows(); ++i) out(k++) = std::numbers::sqrt2 * b_(i, j);
  return out;
}

SkewLift SkewLift::unflatten(Eigen::Index n, Eigen::Index p, const Vector& coords) {
  if (coords.size() != manifold_dimension(n, p)) {
    throw Error(ErrorCode::ShapeMismatch, "unflatten: expected " + std::to_string(manifold_dimension(n, p)) +
                                              " coordinates, got " + std::to_string(coords.size()));
  }
  Matrix c = Matrix::Zero(p, p);
  Matrix b(n - p, p);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) {
      c(i, j) = coords(k++) / std::numbers::sqrt2;
      c(j, i) = -c(i, j);
    }
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n - p; ++i) b(i, j) = coords(k++) / std::numbers::sqrt2;
  return SkewLift(std::move(c), std::move(b), Trusted{});
}

SkewLift SkewLift::operator+(const SkewLift& other) const {
  require_same_shape(*this, other, "SkewLift +");
  return SkewLift(c_ + other.c_, b_ + other.b_, Trusted{});
}

double SkewLift::norm() const { return std::sqrt(inner(*this, *this)); }

double inner(const SkewLift& u, const SkewLift& v) {
  require_same_shape(u, v, "inner");
  // trace(U^T V) over [[C, -B^T], [B, 0]]: the B block appears twice.
  return (u.c().array() * v.c().array()).sum() + 2.0 * (u.b().array() * v.b().array()).sum();
}

SkewLift lift(const StiefelPoint& x, const StiefelPoint& y) {
  require_same_shape(x, y, "lift");
  const Eigen::Index p = x.p();
  const Matrix s = x.upper() + y.upper();
  Matrix s_inv;
  try {
    s_inv = matkit::solve_linear(s, Matrix::Identity(p, p), kChartRcond);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularSystem) throw;
    throw Error(ErrorCode::OutOfNeighborhood, "X_u + Y_u is singular (" + std::string(e.what()) + ")");
  }
  const Matrix m = y.upper().transpose() * x.upper() + x.lower().transpose() * y.lower();
  Matrix c = 2.0 * s_inv.transpose() * matkit::skew_part(m) * s_inv;
  c = (0.5 * (c - c.transpose())).eval();
  Matrix b = (y.lower() - x.lower()) * s_inv;
  return SkewLift(std::move(c), std::move(b));
}

Matrix cayley(const SkewLift& w) {
  const Matrix wf = w.full();
  const Matrix id = Matrix::Identity(wf.rows(), wf.cols());
  // I - W is invertible for every skew W; (I + W) and (I - W)^{-1} commute.
  return matkit::solve_linear(id - wf, id + wf, 0.0);
}

StiefelPoint retract(const StiefelPoint& x, const SkewLift& w) {
  if (w.n() != x.n() || w.p() != x.p()) throw Error(ErrorCode::ShapeMismatch, "retract: lift/point shapes differ");
  const Eigen::Index p = x.p();
  const Matrix& c = w.c();
  const Matrix& b = w.b();
  // W = L R^T with L = [[I, 0], [0, B]] and R^T = [[C, -B^T], [I, 0]], so
  // (I - W)^{-1} X = X + L v with (I - R^T L) v = R^T X (Woodbury), and
  // Cay(W) X = 2 (I - W)^{-1} X - X. Eliminating the second block of v leaves
  // a p x p system whose symmetric part I + B^T B is positive definite.
  const Matrix btb = b.transpose() * b;
  const Matrix k = Matrix::Identity(p, p) - c + btb;
  const Matrix r1 = c * x.upper() - b.transpose() * x.lower() - btb * x.upper();
  const Matrix v1 = matkit::solve_linear(k, r1, 0.0);
  const Matrix v2 = v1 + x.upper();
  Matrix z = x.matrix();
  z.topRows(p) += v1;
  z.bottomRows(x.n() - p) += b * v2;
  return StiefelPoint(2.0 * z - x.matrix());
}

StiefelPoint geodesic_point(const StiefelPoint& x, const StiefelPoint& y, double t) {
  return retract(x, lift(x, y).scaled(t));
}

double distance(const StiefelPoint& x, const StiefelPoint& y) { return lift(x, y).norm(); }

bool in_neighborhood(const StiefelPoint& x, const StiefelPoint& y) {
  if (x.n() != y.n() || x.p() != y.p()) return false;
  const Matrix s = x.upper() + y.upper();
  if (!(matkit::rcond(s) >= kChartRcond)) return false;
  return distance(x, y) < kRegularBallRadius;
}

StiefelPoint random_haar(Eigen::Index n, Eigen::Index p, Rng& rng) {
  if (p < 1 || n < p) throw Error(ErrorCode::ShapeMismatch, "random_haar needs n >= p >= 1");
  return StiefelPoint(matkit::orthonormalize(standard_normal(n, p, rng)));
}

GeodesicSegment::GeodesicSegment(StiefelPoint start, StiefelPoint end)
    : start_(std::move(start)), end_(std::move(end)), lift_(stiefel::lift(start_, end_)) {}

}  // namespace sfm::stiefel
