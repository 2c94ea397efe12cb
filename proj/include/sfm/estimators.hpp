#pragma once

// Fréchet-mean estimators on St(p, n):
//  * the single-pass inductive estimator M_1 = X_1, M_{k+1} = Gamma_{M_k}^{X_{k+1}}(1 / (k + 1)),
//  * batch fixed-point gradient descent on sum_i d^2(X_i, M), optionally warm-started,
//  * a stochastic-gradient baseline w_{t+1} = Exp_w(gamma_t lift(w, z_t)).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sfm/gaussian.hpp"
#include "sfm/stiefel.hpp"

namespace sfm::estimators {

using stiefel::StiefelPoint;

struct EstimatorTrace {
  std::size_t k = 0;                ///< samples consumed (or iteration index)
  double error_to_reference = 0.0;  ///< distance_to_mean(reference, M_k)
  double elapsed = 0.0;             ///< seconds since the run started
};

struct FrechetMeanResult {
  explicit FrechetMeanResult(StiefelPoint m) : estimate(std::move(m)) {}

  StiefelPoint estimate;
  std::size_t steps = 0;
  std::vector<EstimatorTrace> trace;
  double wall_time = 0.0;
  bool converged = true;
  double gradient_norm = 0.0;        ///< batch only: ||mean lift|| at the estimate
  std::vector<std::size_t> skipped;  ///< indices dropped as out of neighborhood
};

/// M_{k+1} = geodesic_point(m_k, x_next, 1 / (k + 1)). Throws
/// OutOfNeighborhood (naming k) unless in_neighborhood(m_k, x_next).
StiefelPoint ifme_step(const StiefelPoint& m_k, const StiefelPoint& x_next, std::size_t k);

/// Streaming form of the inductive estimator. Holds only the running estimate
/// and a counter. Samples outside the neighborhood of the current estimate are
/// skipped and their stream index recorded.
class InductiveMean {
 public:
  /// Returns false if the sample was skipped.
  bool push(const StiefelPoint& x);

  bool empty() const { return !estimate_.has_value(); }
  const StiefelPoint& estimate() const;
  std::size_t count() const { return count_; }
  std::size_t seen() const { return seen_; }
  const std::vector<std::size_t>& skipped() const { return skipped_; }

 private:
  std::optional<StiefelPoint> estimate_;
  std::size_t count_ = 0;
  std::size_t seen_ = 0;
  std::vector<std::size_t> skipped_;
};

struct IfmeOptions {
  std::optional<StiefelPoint> reference;
  /// Sample counts at which to record a trace entry. Empty records every step
  /// (only when a reference is given).
  std::vector<std::size_t> checkpoints;
};

FrechetMeanResult ifme(std::span<const StiefelPoint> samples, const IfmeOptions& options = {});

struct BatchOptions {
  double tol = 1e-8;
  std::size_t max_iter = 1000;
  double step = 1.0;
  int max_halvings = 40;
};

/// Fixed-point iteration M <- retract(M, tau * mean_i lift(M, X_i)) until the
/// mean lift has norm below tol. tau starts at options.step each iteration and
/// is halved while a step would both raise the objective and fail to shrink
/// the mean lift. On non-convergence the best iterate is returned with
/// converged = false.
FrechetMeanResult batch_fm(std::span<const StiefelPoint> samples, const StiefelPoint& init,
                           const BatchOptions& options = {});

/// sum_i d^2(X_i, M).
double fm_objective(std::span<const StiefelPoint> samples, const StiefelPoint& m);

/// Incremental workload: after each arrival k, recompute the batch mean of
/// the first k samples warm-started at the previous solution. Trace entries
/// are recorded per arrival when a reference is given or checkpoints listed.
FrechetMeanResult batch_fm_incremental(std::span<const StiefelPoint> samples, const BatchOptions& options = {},
                                       const IfmeOptions& trace_options = {});

enum class Visitation { ordered, shuffled, with_replacement };

/// gamma_t = a / (t + b) with t = 0, 1, ... counted over all passes.
struct SgdConfig {
  double a = 1.0;
  double b = 1.0;
  std::size_t passes = 1;
  std::uint64_t seed = 0;
  Visitation visitation = Visitation::with_replacement;

  double step(std::size_t t) const { return a / (static_cast<double>(t) + b); }
  void validate() const;
};

struct SgdResult {
  FrechetMeanResult fm;
  std::vector<StiefelPoint> pass_estimates;  ///< iterate at the end of each pass
};

SgdResult sgd_fm(std::span<const StiefelPoint> samples, const SgdConfig& config, const StiefelPoint& init);

/// I(xbar) = 1 / sigma^2.
double fisher_information(const gaussian::GaussianParams& params);

/// mean_j d^2(estimate_j, reference).
double estimator_variance(std::span<const FrechetMeanResult> trials, const StiefelPoint& reference);
double estimator_variance(std::span<const StiefelPoint> estimates, const StiefelPoint& reference);

}  // namespace sfm::estimators
