#include "sfm/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <string>

namespace sfm::estimators {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_nonempty(std::span<const StiefelPoint> samples, const char* op) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, std::string(op) + ": no samples");
}

/// Trace recorder shared by the estimators.
class Tracer {
 public:
  Tracer(const IfmeOptions& options, Clock::time_point start)
      : start_(start), checkpoints_(options.checkpoints) {
    if (options.reference) frame_.emplace(*options.reference);
    std::sort(checkpoints_.begin(), checkpoints_.end());
  }

  bool wants(std::size_t k) const {
    if (!checkpoints_.empty()) return std::binary_search(checkpoints_.begin(), checkpoints_.end(), k);
    return frame_.has_value();
  }

  // Time spent measuring errors is excluded from the reported clock.
  void record(std::size_t k, const StiefelPoint& m, std::vector<EstimatorTrace>& out) {
    if (!wants(k)) return;
    const auto t0 = Clock::now();
    EstimatorTrace t;
    t.k = k;
    t.elapsed = seconds_since(start_) - overhead_;
    t.error_to_reference = frame_ ? frame_->distance_to(m) : 0.0;
    out.push_back(t);
    overhead_ += seconds_since(t0);
  }

  double elapsed() const { return seconds_since(start_) - overhead_; }

 private:
  Clock::time_point start_;
  std::vector<std::size_t> checkpoints_;
  std::optional<gaussian::Frame> frame_;
  double overhead_ = 0.0;
};

/// Lift from m toward x, or nullopt when x is outside the neighborhood of m.
std::optional<stiefel::SkewLift> neighborhood_lift(const StiefelPoint& m, const StiefelPoint& x) {
  try {
    stiefel::SkewLift w = stiefel::lift(m, x);
    if (!(w.norm() < stiefel::kRegularBallRadius)) return std::nullopt;
    return w;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutOfNeighborhood) throw;
    return std::nullopt;
  }
}

struct LiftSummary {
  stiefel::SkewLift mean;
  double objective;
};

LiftSummary summarize(std::span<const StiefelPoint> samples, const StiefelPoint& m) {
  stiefel::SkewLift sum = stiefel::SkewLift::zero(m.n(), m.p());
  double objective = 0.0;
  for (const StiefelPoint& x : samples) {
    const stiefel::SkewLift w = stiefel::lift(m, x);
    objective += stiefel::inner(w, w);
    sum = sum + w;
  }
  return {sum.scaled(1.0 / static_cast<double>(samples.size())), objective};
}

}  // namespace

StiefelPoint ifme_step(const StiefelPoint& m_k, const StiefelPoint& x_next, std::size_t k) {
  const auto w = neighborhood_lift(m_k, x_next);
  if (!w) {
    throw Error(ErrorCode::OutOfNeighborhood, "inductive step k = " + std::to_string(k) +
                                                  ": sample outside the neighborhood of the estimate");
  }
  return stiefel::retract(m_k, w->scaled(1.0 / (static_cast<double>(k) + 1.0)));
}

bool InductiveMean::push(const StiefelPoint& x) {
  const std::size_t index = seen_++;
  if (!estimate_) {
    estimate_ = x;
    count_ = 1;
    return true;
  }
  const auto w = neighborhood_lift(*estimate_, x);
  if (!w) {
    skipped_.push_back(index);
    return false;
  }
  estimate_ = stiefel::retract(*estimate_, w->scaled(1.0 / (static_cast<double>(count_) + 1.0)));
  ++count_;
  return true;
}

const StiefelPoint& InductiveMean::estimate() const {
  if (!estimate_) throw Error(ErrorCode::InsufficientData, "inductive mean of an empty stream");
  return *estimate_;
}

FrechetMeanResult ifme(std::span<const StiefelPoint> samples, const IfmeOptions& options) {
  require_nonempty(samples, "ifme");
  const auto start = Clock::now();
  Tracer tracer(options, start);
  std::vector<EstimatorTrace> trace;
  InductiveMean mean;
  for (const StiefelPoint& x : samples) {
    if (mean.push(x)) tracer.record(mean.count(), mean.estimate(), trace);
  }
  FrechetMeanResult result{mean.estimate()};
  result.steps = mean.count();
  result.trace = std::move(trace);
  result.wall_time = tracer.elapsed();
  result.skipped = mean.skipped();
  return result;
}

double fm_objective(std::span<const StiefelPoint> samples, const StiefelPoint& m) {
  double total = 0.0;
  for (const StiefelPoint& x : samples) {
    const stiefel::SkewLift w = stiefel::lift(m, x);
    total += stiefel::inner(w, w);
  }
  return total;
}

FrechetMeanResult batch_fm(std::span<const StiefelPoint> samples, const StiefelPoint& init,
                           const BatchOptions& options) {
  require_nonempty(samples, "batch_fm");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw Error(ErrorCode::ConfigError, "batch_fm options");
  const auto start = Clock::now();
  StiefelPoint m = init;
  LiftSummary cur = summarize(samples, m);
  double grad = cur.mean.norm();
  StiefelPoint best = m;
  double best_grad = grad;
  std::size_t iter = 1;
  bool converged = grad < options.tol;
  while (!converged && iter < options.max_iter) {
    double tau = options.step;
    bool moved = false;
    for (int h = 0; h <= options.max_halvings; ++h, tau *= 0.5) {
      StiefelPoint cand = stiefel::retract(m, cur.mean.scaled(tau));
      LiftSummary next = summarize(samples, cand);
      const double next_grad = next.mean.norm();
      if (next.objective <= cur.objective || next_grad < grad) {
        m = std::move(cand);
        cur = std::move(next);
        grad = next_grad;
        moved = true;
        break;
      }
    }
    ++iter;
    if (grad < best_grad) {
      best = m;
      best_grad = grad;
    }
    converged = grad < options.tol;
    if (!moved) break;
  }
  FrechetMeanResult result{converged ? m : best};
  result.steps = iter;
  result.converged = converged;
  result.gradient_norm = converged ? grad : best_grad;
  result.wall_time = seconds_since(start);
  return result;
}

FrechetMeanResult batch_fm_incremental(std::span<const StiefelPoint> samples, const BatchOptions& options,
                                       const IfmeOptions& trace_options) {
  require_nonempty(samples, "batch_fm_incremental");
  const auto start = Clock::now();
  Tracer tracer(trace_options, start);
  std::vector<EstimatorTrace> trace;
  StiefelPoint m = samples.front();
  std::size_t total_iters = 0;
  bool converged = true;
  double grad = 0.0;
  for (std::size_t k = 1; k <= samples.size(); ++k) {
    FrechetMeanResult r = batch_fm(samples.first(k), m, options);
    m = r.estimate;
    total_iters += r.steps;
    converged = r.converged;
    grad = r.gradient_norm;
    tracer.record(k, m, trace);
  }
  FrechetMeanResult result{m};
  result.steps = total_iters;
  result.trace = std::move(trace);
  result.converged = converged;
  result.gradient_norm = grad;
  result.wall_time = tracer.elapsed();
  return result;
}

void SgdConfig::validate() const {
  if (!(a > 0.0) || !(b >= 0.0)) throw Error(ErrorCode::ConfigError, "SGD schedule needs a > 0 and b >= 0");
  if (b == 0.0) throw Error(ErrorCode::ConfigError, "SGD schedule with b = 0 is undefined at t = 0");
  if (passes < 1) throw Error(ErrorCode::ConfigError, "SGD needs at least one pass");
}

SgdResult sgd_fm(std::span<const StiefelPoint> samples, const SgdConfig& config, const StiefelPoint& init) {
  require_nonempty(samples, "sgd_fm");
  config.validate();
  const auto start = Clock::now();
  Rng rng(config.seed);
  const std::size_t n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  SgdResult out{FrechetMeanResult{init}, {}};
  StiefelPoint w = init;
  std::size_t t = 0;
  for (std::size_t pass = 0; pass < config.passes; ++pass) {
    if (config.visitation == Visitation::shuffled) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx = config.visitation == Visitation::with_replacement ? pick(rng) : order[i];
      const auto g = neighborhood_lift(w, samples[idx]);
      if (!g) {
        out.fm.skipped.push_back(idx);
        continue;
      }
      w = stiefel::retract(w, g->scaled(config.step(t)));
      ++t;
    }
    out.pass_estimates.push_back(w);
  }
  out.fm.estimate = w;
  out.fm.steps = t;
  out.fm.wall_time = seconds_since(start);
  return out;
}

double fisher_information(const gaussian::GaussianParams& params) { return 1.0 / (params.sigma() * params.sigma()); }

double estimator_variance(std::span<const StiefelPoint> estimates, const StiefelPoint& reference) {
  if (estimates.size() < 2) throw Error(ErrorCode::InsufficientData, "estimator variance needs >= 2 trials");
  const gaussian::Frame frame(reference);
  double total = 0.0;
  for (const StiefelPoint& e : estimates) {
    const double d = frame.distance_to(e);
    total += d * d;
  }
  return total / static_cast<double>(estimates.size());
}

double estimator_variance(std::span<const FrechetMeanResult> trials, const StiefelPoint& reference) {
  std::vector<StiefelPoint> est;
  est.reserve(trials.size());
  for (const FrechetMeanResult& r : trials) est.push_back(r.estimate);
  return estimator_variance(std::span<const StiefelPoint>(est), reference);
}

}  // namespace sfm::estimators
