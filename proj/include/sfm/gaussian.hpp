#pragma once

// The Gaussian N(xbar, sigma) on St(p, n), f(x) = exp(-d^2(x, xbar) / (2 sigma^2)) / C(sigma),
// supported on the regular ball around xbar.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sfm/stiefel.hpp"

namespace sfm::gaussian {

using matkit::Matrix;
using stiefel::SkewLift;
using stiefel::StiefelPoint;

class GaussianParams {
 public:
  GaussianParams(StiefelPoint mean, double sigma, double support_radius = stiefel::kRegularBallRadius);

  const StiefelPoint& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  double support_radius() const { return support_radius_; }

 private:
  StiefelPoint mean_;
  double sigma_;
  double support_radius_;
};

/// R in SO(n) whose first p columns are xbar, so that R O = xbar. When
/// p == n the completion is xbar itself and det(R) = det(xbar).
Matrix frame_completion(const StiefelPoint& xbar);

/// Carries a point together with its frame completion so that distances to it
/// can be measured in the origin chart.
class Frame {
 public:
  explicit Frame(StiefelPoint anchor);

  const StiefelPoint& anchor() const { return anchor_; }
  const Matrix& rotation() const { return r_; }

  /// R^T y.
  StiefelPoint to_origin(const StiefelPoint& y) const;
  /// R x.
  StiefelPoint from_origin(const StiefelPoint& x) const;

  /// distance(O, R^T y). Throws OutOfNeighborhood outside the origin chart.
  double distance_to(const StiefelPoint& y) const;

 private:
  StiefelPoint anchor_;
  Matrix r_;
  bool identity_;
};

/// Distance from xbar measured by translating to the origin chart; exactly
/// invariant under rotating both arguments by the same element of SO(n).
double distance_to_mean(const StiefelPoint& xbar, const StiefelPoint& y);

/// -d^2(x, xbar) / (2 sigma^2), or -infinity outside the support.
double log_kernel(const GaussianParams& params, const StiefelPoint& x);

struct SamplerOptions {
  /// Draw only the B block of the lift (subspace motion, no frame rotation).
  bool horizontal_only = false;
  /// Optional log acceptance weight (must be <= 0) applied to each origin-chart
  /// tangent draw; a hook for volume-Jacobian corrections. Empty means none.
  std::function<double(const SkewLift&)> log_acceptance;
  /// Maximum tangent draws per returned sample before giving up.
  std::size_t max_draws = 1'000'000;
};

/// One tangent W at the origin: isotropic Gaussian in the trace metric with
/// E||W||^2 = sigma^2, conditioned on ||W|| < support_radius.
SkewLift sample_origin_tangent(Eigen::Index n, Eigen::Index p, double sigma, double support_radius, Rng& rng,
                               const SamplerOptions& options = {});

/// Draws R Cay(W) O with R = frame_completion(mean) and W from
/// sample_origin_tangent. d(mean, X) = ||W|| exactly under distance_to_mean.
std::vector<StiefelPoint> sample(const GaussianParams& params, std::size_t count, Rng& rng,
                                 const SamplerOptions& options = {});

struct NormalizerEstimate {
  double value = 0.0;  ///< Z relative to the total (Haar) volume of St(p, n)
  double std_error = 0.0;
  std::size_t n_samples = 0;
  double sigma = 0.0;
};

/// Monte-Carlo estimate of Z(anchor, sigma) = integral of the kernel over the
/// support ball, from `n_mc` Haar-uniform draws.
NormalizerEstimate estimate_normalizer(double sigma, Eigen::Index n, Eigen::Index p, std::size_t n_mc, Rng& rng,
                                       const std::optional<StiefelPoint>& anchor = std::nullopt,
                                       double support_radius = stiefel::kRegularBallRadius);

struct GofBin {
  double lower = 0.0;
  double upper = 0.0;
  double observed = 0.0;
  double expected = 0.0;
};

struct GofReport {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 0.0;
  double sigma = 0.0;
  bool sigma_fitted = false;
  std::size_t n = 0;
  std::vector<GofBin> bins;
};

/// Chi-squared test of H0: distances ~ half-normal(0, sigma). Bins are
/// equiprobable under H0; the bin count is reduced until every bin expects at
/// least 5 observations. Without `sigma` the scale is fitted by maximum
/// likelihood and one more degree of freedom is spent. With `truncation` the
/// null is the half-normal conditioned on d < truncation.
GofReport gof_halfnormal(std::span<const double> distances, std::optional<double> sigma, int n_bins = 20,
                         std::optional<double> truncation = std::nullopt);

}  // namespace sfm::gaussian
