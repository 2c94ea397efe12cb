#pragma once

// Geometry of the compact Stiefel manifold St(p, n) = { X in R^{n x p} : X^T X = I_p }
// with the canonical metric <U, V> = trace(U^T V), the Cayley retraction
// Exp_X(W) = Cay(W) X and its closed-form inverse (the lifting map).
//
// Points are split as X = [X_u; X_l] with X_u the top p x p block.

#include <cmath>
#include <numbers>

#include "sfm/matkit.hpp"
#include "sfm/random.hpp"

namespace sfm::stiefel {

using matkit::Matrix;
using matkit::Vector;

/// Radius of the regular geodesic ball. Sectional curvature is at most 2, so
/// pi / (2 sqrt(2)).
inline constexpr double kRegularBallRadius = std::numbers::pi / (2.0 * std::numbers::sqrt2);

/// Reciprocal-condition threshold on X_u + Y_u below which two points are
/// treated as outside each other's lifting chart.
inline constexpr double kChartRcond = 1e-8;

/// Orthonormality drift accepted as-is, and the drift beyond which a matrix
/// is rejected rather than re-orthonormalized.
inline constexpr double kOrthoTol = 1e-10;
inline constexpr double kOrthoRepairLimit = 1e-6;

/// Dimension np - p(p+1)/2.
constexpr Eigen::Index manifold_dimension(Eigen::Index n, Eigen::Index p) { return n * p - p * (p + 1) / 2; }

class StiefelPoint {
 public:
  /// Validates m^T m = I_p. Drift in (kOrthoTol, kOrthoRepairLimit] is
  /// repaired by QR re-orthonormalization; larger drift throws NotOrthonormal.
  explicit StiefelPoint(Matrix m);

  /// O = [I_p; 0].
  static StiefelPoint origin(Eigen::Index n, Eigen::Index p);

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index p() const { return x_.cols(); }
  const Matrix& matrix() const { return x_; }
  auto upper() const { return x_.topRows(p()); }
  auto lower() const { return x_.bottomRows(n() - p()); }

 private:
  Matrix x_;
};

/// Tangent carrier in lifted form: the n x n skew matrix [[C, -B^T], [B, 0]]
/// with C p x p skew and B (n-p) x p.
class SkewLift {
 public:
  /// Throws if c is not skew within 1e-12 (relative); c is then made exactly
  /// antisymmetric.
  SkewLift(Matrix c, Matrix b);

  static SkewLift zero(Eigen::Index n, Eigen::Index p);

  Eigen::Index n() const { return b_.rows() + c_.rows(); }
  Eigen::Index p() const { return c_.rows(); }
  const Matrix& c() const { return c_; }
  const Matrix& b() const { return b_; }

  /// The n x n skew matrix.
  Matrix full() const;

  /// Number of free coordinates, p(p-1)/2 + (n-p)p.
  Eigen::Index coordinate_count() const { return manifold_dimension(n(), p()); }

  /// Free coordinates scaled by sqrt(2) so that the Euclidean inner product of
  /// flattened vectors equals the trace metric. Order: C strictly-upper entries
  /// row by row, then B column-major.
  Vector flatten() const;
  static SkewLift unflatten(Eigen::Index n, Eigen::Index p, const Vector& coords);

  SkewLift scaled(double t) const { return SkewLift(t * c_, t * b_, Trusted{}); }
  SkewLift operator+(const SkewLift& other) const;
  SkewLift operator-() const { return scaled(-1.0); }

  double norm() const;

 private:
  struct Trusted {};
  SkewLift(Matrix c, Matrix b, Trusted) : c_(std::move(c)), b_(std::move(b)) {}

  Matrix c_;
  Matrix b_;
};

/// <U, V> = trace(U^T V) on the full n x n lifts.
double inner(const SkewLift& u, const SkewLift& v);

/// Exp_X^{-1}(Y). Throws OutOfNeighborhood when X_u + Y_u is singular to
/// within kChartRcond.
SkewLift lift(const StiefelPoint& x, const StiefelPoint& y);

/// Cay(W) = (I + W)(I - W)^{-1}, dense n x n.
Matrix cayley(const SkewLift& w);

/// Exp_X(W) = Cay(W) X. Uses the rank-2p structure of W, so the cost is
/// O(n p^2) rather than O(n^3).
StiefelPoint retract(const StiefelPoint& x, const SkewLift& w);

/// Gamma_X^Y(t) = Exp_X(t Exp_X^{-1}(Y)).
StiefelPoint geodesic_point(const StiefelPoint& x, const StiefelPoint& y, double t);

/// d(X, Y) = ||Exp_X^{-1}(Y)||. Symmetric, since lift(Y, X) = -lift(X, Y),
/// but not a metric: on St(1,2) it is sqrt(2) tan(angle / 2).
double distance(const StiefelPoint& x, const StiefelPoint& y);

/// Chart well-conditioned and distance below kRegularBallRadius.
bool in_neighborhood(const StiefelPoint& x, const StiefelPoint& y);

/// Haar-uniform point (QR of a Gaussian matrix).
StiefelPoint random_haar(Eigen::Index n, Eigen::Index p, Rng& rng);

class GeodesicSegment {
 public:
  GeodesicSegment(StiefelPoint start, StiefelPoint end);

  StiefelPoint evaluate(double t) const { return retract(start_, lift_.scaled(t)); }

  const StiefelPoint& start() const { return start_; }
  const StiefelPoint& end() const { return end_; }
  const SkewLift& lift() const { return lift_; }
  double length() const { return lift_.norm(); }

 private:
  StiefelPoint start_;
  StiefelPoint end_;
  SkewLift lift_;
};

}  // namespace sfm::stiefel
