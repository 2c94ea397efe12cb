#include "sfm/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sfm::grassmann {

HorizontalTangent::HorizontalTangent(StiefelPoint basepoint, Matrix w) : base_(std::move(basepoint)), w_(std::move(w)) {
  if (w_.rows() != base_.n() || w_.cols() != base_.p()) {
    throw Error(ErrorCode::ShapeMismatch, "horizontal tangent shape must match its basepoint");
  }
  matkit::require_finite(w_, "horizontal tangent");
  const double vertical = (base_.matrix().transpose() * w_).norm();
  if (vertical > 1e-10 * std::max(1.0, w_.norm())) {
    throw Error(ErrorCode::InvalidMatrix, "tangent is not horizontal, ||X^T W|| = " + std::to_string(vertical));
  }
}

HorizontalTangent HorizontalTangent::zero(const StiefelPoint& basepoint) {
  return HorizontalTangent(basepoint, Matrix::Zero(basepoint.n(), basepoint.p()));
}

HorizontalTangent HorizontalTangent::project(const StiefelPoint& basepoint, const Matrix& m) {
  const Matrix& x = basepoint.matrix();
  Matrix h = m - x * (x.transpose() * m);
  // One more pass removes what the first leaves behind in floating point.
  h -= x * (x.transpose() * h);
  return HorizontalTangent(basepoint, std::move(h));
}

Vector HorizontalTangent::angles() const { return matkit::thin_svd(w_).s; }

HorizontalTangent horiz_log(const StiefelPoint& o, const StiefelPoint& x) {
  if (o.n() != x.n() || o.p() != x.p()) throw Error(ErrorCode::ShapeMismatch, "horiz_log: shapes differ");
  const Matrix otx = o.matrix().transpose() * x.matrix();
  // The singular values of O^T X are the principal-angle cosines.
  if (matkit::thin_svd(otx).s.minCoeff() < 1e-12) {
    throw Error(ErrorCode::CutLocus, "O^T X is singular; some principal angle is pi/2");
  }
  Matrix otx_inv;
  try {
    otx_inv = matkit::solve_linear(otx, Matrix::Identity(o.p(), o.p()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularSystem) throw;
    throw Error(ErrorCode::CutLocus, "O^T X is singular; some principal angle is pi/2");
  }
  Matrix f = x.matrix() * otx_inv - o.matrix();
  // Exact in exact arithmetic; strip roundoff so the result passes the
  // horizontality check even for large tan(theta).
  f -= o.matrix() * (o.matrix().transpose() * f);
  const matkit::ThinSvd svd = matkit::thin_svd(f);
  const Vector theta = svd.s.array().atan().matrix();
  Matrix w = svd.u * theta.asDiagonal() * svd.v.transpose();
  w -= o.matrix() * (o.matrix().transpose() * w);
  return HorizontalTangent(o, std::move(w));
}

StiefelPoint horiz_exp(const StiefelPoint& o, const HorizontalTangent& w) {
  if (w.basepoint().n() != o.n() || w.basepoint().p() != o.p()) {
    throw Error(ErrorCode::ShapeMismatch, "horiz_exp: tangent/basepoint shapes differ");
  }
  const matkit::ThinSvd svd = matkit::thin_svd(w.matrix());
  const Vector cos_t = svd.s.array().cos().matrix();
  const Vector sin_t = svd.s.array().sin().matrix();
  Matrix y = o.matrix() * svd.v * cos_t.asDiagonal() * svd.v.transpose() +
             svd.u * sin_t.asDiagonal() * svd.v.transpose();
  return StiefelPoint(std::move(y));
}

PrincipalAngles principal_angles(const StiefelPoint& x, const StiefelPoint& y) {
  if (x.n() != y.n() || x.p() != y.p()) throw Error(ErrorCode::ShapeMismatch, "principal_angles: shapes differ");
  const Matrix xty = x.matrix().transpose() * y.matrix();
  const Vector cosines = matkit::thin_svd(xty).s;                                    // descending
  const Vector sines = matkit::thin_svd(y.matrix() - x.matrix() * xty).s;              // descending
  const Eigen::Index p = cosines.size();
  PrincipalAngles out;
  out.angles.resize(p);
  // arccos loses half the digits near 0, arcsin near pi/2; take the
  // well-conditioned one for each angle. Cosines descend while sines of the
  // same angles ascend, so angle i pairs cosines(i) with sines(p - 1 - i).
  for (Eigen::Index i = 0; i < p; ++i) {
    const double c = std::clamp(cosines(i), -1.0, 1.0);
    const double s = std::clamp(sines(p - 1 - i), 0.0, 1.0);
    const double theta = (c * c < 0.5) ? std::acos(c) : std::asin(s);
    out.angles(p - 1 - i) = std::clamp(theta, 0.0, std::numbers::pi / 2);
  }
  return out;
}

double principal_angle_distance(const StiefelPoint& x, const StiefelPoint& y) { return principal_angles(x, y).norm(); }

}  // namespace sfm::grassmann
