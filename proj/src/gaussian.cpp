#include "sfm/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace sfm::gaussian {

GaussianParams::GaussianParams(StiefelPoint mean, double sigma, double support_radius)
    : mean_(std::move(mean)), sigma_(sigma), support_radius_(support_radius) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw Error(ErrorCode::ConfigError, "sigma must be positive");
  if (!(support_radius_ > 0.0) || !std::isfinite(support_radius_)) {
    throw Error(ErrorCode::ConfigError, "support radius must be positive and finite");
  }
}

Matrix frame_completion(const StiefelPoint& xbar) {
  const Eigen::Index n = xbar.n();
  const Eigen::Index p = xbar.p();
  Matrix r(n, n);
  r.leftCols(p) = xbar.matrix();
  if (p == n) return r;
  Eigen::HouseholderQR<Matrix> qr(xbar.matrix());
  const Matrix q = qr.householderQ();
  r.rightCols(n - p) = q.rightCols(n - p);
  if (r.determinant() < 0) r.col(n - 1) *= -1.0;
  return r;
}

Frame::Frame(StiefelPoint anchor) : anchor_(std::move(anchor)), r_(frame_completion(anchor_)) {
  identity_ = r_.isIdentity(0.0);
}

StiefelPoint Frame::to_origin(const StiefelPoint& y) const {
  if (identity_) return y;
  return StiefelPoint(r_.transpose() * y.matrix());
}

StiefelPoint Frame::from_origin(const StiefelPoint& x) const {
  if (identity_) return x;
  return StiefelPoint(r_ * x.matrix());
}

double Frame::distance_to(const StiefelPoint& y) const {
  const StiefelPoint o = StiefelPoint::origin(anchor_.n(), anchor_.p());
  return stiefel::distance(o, to_origin(y));
}

double distance_to_mean(const StiefelPoint& xbar, const StiefelPoint& y) { return Frame(xbar).distance_to(y); }

double log_kernel(const GaussianParams& params, const StiefelPoint& x) {
  double d = 0.0;
  try {
    d = distance_to_mean(params.mean(), x);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutOfNeighborhood) throw;
    return -std::numeric_limits<double>::infinity();
  }
  if (!(d < params.support_radius())) return -std::numeric_limits<double>::infinity();
  return -d * d / (2.0 * params.sigma() * params.sigma());
}

SkewLift sample_origin_tangent(Eigen::Index n, Eigen::Index p, double sigma, double support_radius, Rng& rng,
                               const SamplerOptions& options) {
  const Eigen::Index dim = stiefel::manifold_dimension(n, p);
  const Eigen::Index fiber = p * (p - 1) / 2;
  const Eigen::Index active = options.horizontal_only ? dim - fiber : dim;
  if (active == 0) return SkewLift::zero(n, p);
  const double coord_sd = sigma / std::sqrt(static_cast<double>(active));
  std::normal_distribution<double> g(0.0, coord_sd);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  stiefel::Vector coords = stiefel::Vector::Zero(dim);
  for (std::size_t draw = 0; draw < options.max_draws; ++draw) {
    for (Eigen::Index k = options.horizontal_only ? fiber : 0; k < dim; ++k) coords(k) = g(rng);
    if (!(coords.norm() < support_radius)) continue;
    SkewLift w = SkewLift::unflatten(n, p, coords);
    if (options.log_acceptance) {
      const double log_a = std::min(0.0, options.log_acceptance(w));
      if (!(std::log(u(rng)) < log_a)) continue;
    }
    return w;
  }
  throw Error(ErrorCode::ScaleTooLarge, "no tangent draw inside the support ball after " +
                                            std::to_string(options.max_draws) + " attempts (sigma = " +
                                            std::to_string(sigma) + ")");
}

std::vector<StiefelPoint> sample(const GaussianParams& params, std::size_t count, Rng& rng,
                                 const SamplerOptions& options) {
  if (count < 1) throw Error(ErrorCode::ConfigError, "sample count must be at least 1");
  const Eigen::Index n = params.mean().n();
  const Eigen::Index p = params.mean().p();
  const StiefelPoint origin = StiefelPoint::origin(n, p);
  const Frame frame(params.mean());
  std::vector<StiefelPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const SkewLift w = sample_origin_tangent(n, p, params.sigma(), params.support_radius(), rng, options);
    out.push_back(frame.from_origin(stiefel::retract(origin, w)));
  }
  return out;
}

NormalizerEstimate estimate_normalizer(double sigma, Eigen::Index n, Eigen::Index p, std::size_t n_mc, Rng& rng,
                                       const std::optional<StiefelPoint>& anchor, double support_radius) {
  if (n_mc < 1000) throw Error(ErrorCode::InsufficientData, "normalizer estimation needs n_mc >= 1000");
  if (!(sigma > 0.0)) throw Error(ErrorCode::ConfigError, "sigma must be positive");
  const Frame frame(anchor.value_or(StiefelPoint::origin(n, p)));
  if (frame.anchor().n() != n || frame.anchor().p() != p) throw Error(ErrorCode::ShapeMismatch, "anchor shape");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const StiefelPoint y = stiefel::random_haar(n, p, rng);
    double k = 0.0;
    try {
      const double d = frame.distance_to(y);
      if (d < support_radius) k = std::exp(-d * d / (2.0 * sigma * sigma));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfNeighborhood) throw;
    }
    sum += k;
    sum_sq += k * k;
  }
  const double m = static_cast<double>(n_mc);
  NormalizerEstimate est;
  est.value = sum / m;
  const double var = std::max(0.0, (sum_sq - m * est.value * est.value) / (m - 1.0));
  est.std_error = std::sqrt(var / m);
  est.n_samples = n_mc;
  est.sigma = sigma;
  if (!(est.value > 0.0)) {
    throw Error(ErrorCode::InsufficientData, "no Haar draw landed in the support ball; increase n_mc");
  }
  return est;
}

GofReport gof_halfnormal(std::span<const double> distances, std::optional<double> sigma, int n_bins,
                         std::optional<double> truncation) {
  const std::size_t n = distances.size();
  for (double d : distances) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw Error(ErrorCode::InvalidMatrix, "distances must be finite and >= 0");
  }
  GofReport report;
  report.n = n;
  report.sigma_fitted = !sigma.has_value();
  if (sigma) {
    if (!(*sigma > 0.0)) throw Error(ErrorCode::ConfigError, "sigma must be positive");
    report.sigma = *sigma;
  } else {
    if (n == 0) throw Error(ErrorCode::InsufficientData, "no distances");
    double ss = 0.0;
    for (double d : distances) ss += d * d;
    report.sigma = std::sqrt(ss / static_cast<double>(n));
    if (!(report.sigma > 0.0)) report.sigma = std::numeric_limits<double>::min();
  }
  const int min_bins = report.sigma_fitted ? 3 : 2;
  const int bins = std::min<int>(n_bins, static_cast<int>(n / 5));
  if (bins < min_bins) {
    throw Error(ErrorCode::InsufficientData, "need at least " + std::to_string(5 * min_bins) + " distances, got " +
                                                 std::to_string(n));
  }
  const double scale = report.sigma * std::sqrt(2.0);
  const double mass = truncation ? std::erf(*truncation / scale) : 1.0;
  if (!(mass > 0.0)) throw Error(ErrorCode::ConfigError, "truncation leaves no probability mass");

  std::vector<double> edges(bins + 1);
  edges[0] = 0.0;
  for (int j = 1; j < bins; ++j) {
    edges[j] = scale * boost::math::erf_inv(mass * static_cast<double>(j) / bins);
  }
  edges[bins] = std::numeric_limits<double>::infinity();

  report.bins.resize(bins);
  const double expected = static_cast<double>(n) / bins;
  for (int j = 0; j < bins; ++j) {
    report.bins[j].lower = edges[j];
    report.bins[j].upper = edges[j + 1];
    report.bins[j].expected = expected;
  }
  for (double d : distances) {
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, d);
    report.bins[static_cast<std::size_t>(it - edges.begin() - 1)].observed += 1.0;
  }
  for (const GofBin& b : report.bins) report.statistic += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
  report.dof = bins - 1 - (report.sigma_fitted ? 1 : 0);
  const boost::math::chi_squared chi2(report.dof);
  report.p_value = boost::math::cdf(boost::math::complement(chi2, report.statistic));
  return report;
}

}  // namespace sfm::gaussian
