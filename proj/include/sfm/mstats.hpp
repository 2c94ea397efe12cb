#pragma once

// Downstream statistics on St(p, n): principal geodesic analysis, k-means on
// product manifolds with Fréchet-mean centroids, and ARMA subspace models.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sfm/estimators.hpp"
#include "sfm/stiefel.hpp"

namespace sfm::mstats {

using matkit::Matrix;
using matkit::Vector;
using stiefel::StiefelPoint;

// ---------------------------------------------------------------------------
// Principal geodesic analysis

/// Principal directions live in the flattened lift coordinates at the mean
/// (see SkewLift::flatten), whose Euclidean geometry is the trace metric.
struct PgaModel {
  StiefelPoint mean;
  Matrix directions;           ///< dim x k, orthonormal columns
  Vector explained_variance;   ///< all dim eigenvalues, descending
  double total_variance = 0.0; ///< mean squared lift norm at the mean

  Eigen::Index components() const { return directions.cols(); }
  /// Share of total variance carried by the first k directions.
  double explained_ratio(Eigen::Index k) const;
};

/// Fréchet mean by batch_fm (warm-started at the inductive estimate), then an
/// eigen-decomposition of the second moment of the flattened lifts.
PgaModel pga_fit(std::span<const StiefelPoint> samples, Eigen::Index k);

/// retract(mean, projection of lift(mean, x) onto the first k directions).
StiefelPoint pga_reconstruct(const PgaModel& model, const StiefelPoint& x, Eigen::Index k);

// ---------------------------------------------------------------------------
// Product-manifold k-means

struct ProductPoint {
  StiefelPoint u;
  std::optional<StiefelPoint> v;
  Vector euclidean;
};

struct ProductWeights {
  double u = 1.0;
  double v = 1.0;
  double euclidean = 1.0;
};

/// sqrt(w_u ||U - U'||_F^2 + w_v ||V - V'||_F^2 + w_e ||e - e'||^2). The
/// Stiefel parts use the chordal distance, which is a metric on all of
/// St(p, n); the lift distance is not (it violates the triangle inequality).
double product_distance(const ProductPoint& x, const ProductPoint& y, const ProductWeights& weights = {});

enum class CentroidMethod { inductive, batch };

struct KMeansOptions {
  std::size_t k = 2;
  std::size_t max_iter = 100;
  ProductWeights weights;
  CentroidMethod centroid = CentroidMethod::inductive;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  std::vector<ProductPoint> centroids;
  std::vector<double> inertia;  ///< after each assignment step
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t reseeded = 0;     ///< empty clusters refilled with the farthest point
};

/// Farthest-first seeding (first seed drawn from `seed`), then alternating
/// assignment / componentwise Fréchet-mean centroid updates until the labels
/// stop changing.
KMeansResult kmeans(std::span<const ProductPoint> points, const KMeansOptions& options);

/// Fraction of labels matching `truth` under the best relabeling (k <= 8).
double clustering_accuracy(std::span<const std::size_t> labels, std::span<const std::size_t> truth, std::size_t k);

// ---------------------------------------------------------------------------
// ARMA subspace model f(t) = C z(t) + w(t), z(t + 1) = A z(t) + v(t)

struct ArmaModel {
  StiefelPoint c;          ///< d x p measurement matrix
  Matrix a;                ///< p x p transition
  Vector sigma;            ///< retained singular values
  StiefelPoint v;          ///< T x p right singular vectors
  double spectral_radius = 0.0;

  std::vector<std::complex<double>> eigenvalues() const;
  ProductPoint as_product_point() const { return ProductPoint{c, v, sigma}; }
};

/// features is d x T (one column per time step). With F = U S V^T truncated to
/// p terms: C = U, A = S V^T D1 V (V^T D2 V)^{-1} S^{-1}, where D1 and D2 shift
/// the time index (rows 2..T and 1..T-1 of V).
ArmaModel arma_decompose(const Matrix& features, Eigen::Index p);

}  // namespace sfm::mstats
