#pragma once

// Grassmannian Gr(p, n) through orthonormal representatives: horizontal
// log/exp at a basepoint and the principal-angle distance.

#include "sfm/stiefel.hpp"

namespace sfm::grassmann {

using matkit::Matrix;
using matkit::Vector;
using stiefel::StiefelPoint;

/// An n x p direction W at `basepoint` with basepoint^T W = 0.
class HorizontalTangent {
 public:
  /// Throws InvalidMatrix if ||basepoint^T w||_F > 1e-10 (relative to ||w||).
  HorizontalTangent(StiefelPoint basepoint, Matrix w);

  static HorizontalTangent zero(const StiefelPoint& basepoint);

  /// Projects an arbitrary n x p matrix onto the horizontal space, (I - X X^T) m.
  static HorizontalTangent project(const StiefelPoint& basepoint, const Matrix& m);

  const StiefelPoint& basepoint() const { return base_; }
  const Matrix& matrix() const { return w_; }
  double norm() const { return w_.norm(); }

  /// Singular values of W, i.e. the angles Theta of W = U Theta V^T.
  Vector angles() const;

 private:
  StiefelPoint base_;
  Matrix w_;
};

/// Principal angles between span(X) and span(Y), descending, in [0, pi/2].
struct PrincipalAngles {
  Vector angles;
  double norm() const { return angles.norm(); }
};

/// U Sigma V^T = X (O^T X)^{-1} - O, Theta = arctan(Sigma), W = U Theta V^T.
/// Throws CutLocus when O^T X is singular.
HorizontalTangent horiz_log(const StiefelPoint& o, const StiefelPoint& x);

/// With W = U Theta V^T: O V cos(Theta) V^T + U sin(Theta) V^T.
StiefelPoint horiz_exp(const StiefelPoint& o, const HorizontalTangent& w);

PrincipalAngles principal_angles(const StiefelPoint& x, const StiefelPoint& y);

/// sqrt(sum_i arccos(sigma_i)^2), sigma_i the singular values of X^T Y.
double principal_angle_distance(const StiefelPoint& x, const StiefelPoint& y);

}  // namespace sfm::grassmann
