#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sfm/harness.hpp"

namespace sfm::harness {

namespace {

using estimators::FrechetMeanResult;
using matkit::Vector;
using stiefel::SkewLift;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

/// Runs fn(trial) for trial in [0, count) on `threads` workers. Each call
/// writes only to its own slot, so results merge by trial index.
template <class Fn>
void for_each_trial(std::size_t count, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t t = 0; t < count; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < count; t = next++) {
        try {
          fn(t);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::string sgd_name(double a) { return "SGD[a=" + format_double(a) + "]"; }

/// Trace entry with the largest k not exceeding n.
const estimators::EstimatorTrace* at_or_before(const std::vector<estimators::EstimatorTrace>& trace, std::size_t n) {
  const estimators::EstimatorTrace* best = nullptr;
  for (const auto& e : trace) {
    if (e.k > n) break;
    best = &e;
  }
  return best;
}

struct Series {
  std::string estimator;
  std::vector<std::vector<estimators::EstimatorTrace>> per_trial;
};

std::vector<TraceRow> average_traces(const Series& s) {
  std::map<std::size_t, std::pair<double, double>> sum;
  std::map<std::size_t, std::size_t> hits;
  for (const auto& trial : s.per_trial) {
    for (const auto& e : trial) {
      auto& acc = sum[e.k];
      acc.first += e.error_to_reference;
      acc.second += e.elapsed;
      ++hits[e.k];
    }
  }
  std::vector<TraceRow> rows;
  for (const auto& [k, acc] : sum) {
    const double c = static_cast<double>(hits[k]);
    rows.push_back(TraceRow{s.estimator, k, acc.first / c, acc.second / c});
  }
  return rows;
}

ToleranceRow time_to_tolerance(const Series& s, double tol) {
  ToleranceRow row{s.estimator, tol, 0.0, 0.0};
  std::size_t reached = 0;
  for (const auto& trial : s.per_trial) {
    for (const auto& e : trial) {
      if (e.error_to_reference <= tol) {
        row.mean_time += e.elapsed;
        ++reached;
        break;
      }
    }
  }
  if (reached) row.mean_time /= static_cast<double>(reached);
  row.reached = s.per_trial.empty() ? 0.0 : static_cast<double>(reached) / static_cast<double>(s.per_trial.size());
  return row;
}

/// Isotropic unit direction in the trace metric.
SkewLift random_direction(Eigen::Index n, Eigen::Index p, Rng& rng) {
  const Eigen::Index dim = stiefel::manifold_dimension(n, p);
  Vector v = standard_normal(dim, 1, rng);
  while (v.norm() == 0.0) v = standard_normal(dim, 1, rng);
  return SkewLift::unflatten(n, p, v / v.norm());
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

// ---------------------------------------------------------------------------

void ExperimentConfig::validate(bool need_seed) const {
  if (p < 1 || n < p) config_error("need n >= p >= 1 (got n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) config_error("sigma must be positive");
  if (samples < 1) config_error("samples must be positive");
  if (trials < 1) config_error("trials must be positive");
  if (threads < 1) config_error("threads must be positive");
  if (grid.empty()) config_error("grid must not be empty");
  for (std::size_t g : grid)
    if (g < 1) config_error("grid entries must be positive");
  for (double t : tolerances)
    if (!(t > 0.0)) config_error("tolerances must be positive");
  for (double a : sgd_a)
    if (!(a > 0.0)) config_error("sgd_a entries must be positive");
  if (!(sgd_b > 0.0)) config_error("sgd_b must be positive");
  if (sgd_max_passes < 1) config_error("sgd_max_passes must be positive");
  if (clusters < 1) config_error("clusters must be positive");
  if (!(min_separation > 0.0)) config_error("min_separation must be positive");
  if (bins < 2) config_error("bins must be at least 2");
  if (components < 1) config_error("components must be positive");
  if (time_steps < 2) config_error("time_steps must be at least 2");
  if (state_dim < 1) config_error("state_dim must be positive");
  if (!(noise >= 0.0)) config_error("noise must be non-negative");
  if (need_seed && !seed) config_error("a seed is required (--seed or \"seed\" in the config)");
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) config_error("a seed is required (--seed or \"seed\" in the config)");
  return *seed;
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  static const char* const known[] = {"experiment", "n", "p", "sigma", "samples", "trials", "seed", "threads",
                                      "output", "input", "grid", "incremental", "tolerances", "sgd_a", "sgd_b",
                                      "sgd_max_passes", "clusters", "min_separation", "bins", "components",
                                      "time_steps", "state_dim", "noise"};
  ExperimentConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.is_object()) config_error("config must be a JSON object");
    for (const auto& item : j.items()) {
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return item.key() == k; }) ==
          std::end(known)) {
        config_error("unknown config key '" + item.key() + "'");
      }
    }
    read_field(j, "experiment", c.experiment);
    read_field(j, "n", c.n);
    read_field(j, "p", c.p);
    read_field(j, "sigma", c.sigma);
    read_field(j, "samples", c.samples);
    read_field(j, "trials", c.trials);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    read_field(j, "threads", c.threads);
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    read_field(j, "grid", c.grid);
    read_field(j, "incremental", c.incremental);
    read_field(j, "tolerances", c.tolerances);
    read_field(j, "sgd_a", c.sgd_a);
    read_field(j, "sgd_b", c.sgd_b);
    read_field(j, "sgd_max_passes", c.sgd_max_passes);
    read_field(j, "clusters", c.clusters);
    read_field(j, "min_separation", c.min_separation);
    read_field(j, "bins", c.bins);
    read_field(j, "components", c.components);
    read_field(j, "time_steps", c.time_steps);
    read_field(j, "state_dim", c.state_dim);
    read_field(j, "noise", c.noise);
  } catch (const nlohmann::json::exception& e) {
    config_error(std::string("bad config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------

StiefelPoint reference_mean(Eigen::Index n, Eigen::Index p) { return StiefelPoint::origin(n, p); }

BenchReport bench_fm(const ExperimentConfig& config) {
  config.validate(true);
  const std::uint64_t seed = config.require_seed();
  std::vector<std::size_t> grid = config.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const std::size_t max_n = grid.back();
  const StiefelPoint ref = reference_mean(config.n, config.p);
  const gaussian::GaussianParams params(ref, config.sigma);
  const std::size_t n_sgd = config.sgd_a.size();

  struct TrialOut {
    std::vector<estimators::EstimatorTrace> stifme;
    std::vector<estimators::EstimatorTrace> stfme;
    std::vector<double> stfme_passes;                         // per grid point
    std::vector<std::vector<estimators::EstimatorTrace>> sgd;  // per schedule, per grid point
  };
  std::vector<TrialOut> out(config.trials);

  for_each_trial(config.trials, config.threads, [&](std::size_t trial) {
    Rng rng = substream(seed, trial);
    const std::vector<StiefelPoint> xs = gaussian::sample(params, max_n, rng);
    const std::uint64_t sgd_seed = rng();
    const std::span<const StiefelPoint> all(xs);
    TrialOut& o = out[trial];

    estimators::IfmeOptions every;
    every.reference = ref;
    o.stifme = estimators::ifme(all, every).trace;

    if (config.incremental) {
      const FrechetMeanResult r = estimators::batch_fm_incremental(all, {}, every);
      o.stfme = r.trace;
      o.stfme_passes.assign(grid.size(), static_cast<double>(r.steps));
    } else {
      StiefelPoint m = xs.front();
      double elapsed = 0.0;
      for (std::size_t g : grid) {
        const FrechetMeanResult r = estimators::batch_fm(all.first(g), m);
        m = r.estimate;
        elapsed += r.wall_time;
        o.stfme.push_back({g, gaussian::distance_to_mean(ref, m), elapsed});
        o.stfme_passes.push_back(static_cast<double>(std::max<std::size_t>(r.steps, 1)));
      }
    }

    o.sgd.resize(n_sgd);
    for (std::size_t s = 0; s < n_sgd; ++s) {
      for (std::size_t g : grid) {
        estimators::SgdConfig sc;
        sc.a = config.sgd_a[s];
        sc.b = config.sgd_b;
        sc.seed = substream_seed(sgd_seed, g);
        const estimators::SgdResult r = estimators::sgd_fm(all.first(g), sc, xs.front());
        o.sgd[s].push_back({g, gaussian::distance_to_mean(ref, r.fm.estimate), r.fm.wall_time});
      }
    }
  });

  BenchReport report;
  const double trials = static_cast<double>(config.trials);
  auto add_rows = [&](const std::string& name, auto&& entry_at, auto&& passes_at) {
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      BenchRow row{name, grid[gi], 0.0, 0.0, 0.0, seed};
      for (std::size_t t = 0; t < config.trials; ++t) {
        const estimators::EstimatorTrace* e = entry_at(out[t], gi);
        if (e) {
          row.mean_error += e->error_to_reference;
          row.mean_wall_time += e->elapsed;
        }
        row.passes += passes_at(out[t], gi);
      }
      row.mean_error /= trials;
      row.mean_wall_time /= trials;
      row.passes /= trials;
      report.rows.push_back(row);
    }
  };
  add_rows(
      "StiFME", [&](const TrialOut& o, std::size_t gi) { return at_or_before(o.stifme, grid[gi]); },
      [](const TrialOut&, std::size_t) { return 1.0; });
  add_rows(
      "StFME", [&](const TrialOut& o, std::size_t gi) { return at_or_before(o.stfme, grid[gi]); },
      [](const TrialOut& o, std::size_t gi) { return o.stfme_passes[gi]; });
  for (std::size_t s = 0; s < n_sgd; ++s) {
    add_rows(
        sgd_name(config.sgd_a[s]), [&](const TrialOut& o, std::size_t gi) { return &o.sgd[s][gi]; },
        [](const TrialOut&, std::size_t) { return 1.0; });
  }

  std::vector<Series> series;
  series.push_back({"StiFME", {}});
  series.push_back({"StFME", {}});
  for (std::size_t s = 0; s < n_sgd; ++s) series.push_back({sgd_name(config.sgd_a[s]), {}});
  for (const TrialOut& o : out) {
    series[0].per_trial.push_back(o.stifme);
    series[1].per_trial.push_back(o.stfme);
    for (std::size_t s = 0; s < n_sgd; ++s) series[2 + s].per_trial.push_back(o.sgd[s]);
  }
  std::vector<double> tols = config.tolerances;
  if (tols.empty()) tols = {0.05, 0.02, 0.01};
  for (const Series& s : series) {
    const std::vector<TraceRow> rows = average_traces(s);
    report.traces.insert(report.traces.end(), rows.begin(), rows.end());
    for (double tol : tols) report.time_to_tolerance.push_back(time_to_tolerance(s, tol));
  }
  return report;
}

SgdComparison sgd_compare(const ExperimentConfig& config) {
  config.validate(true);
  const std::uint64_t seed = config.require_seed();
  const StiefelPoint ref = reference_mean(config.n, config.p);
  const gaussian::GaussianParams params(ref, config.sigma);
  const std::size_t n_sgd = config.sgd_a.size();
  const std::size_t max_passes = config.sgd_max_passes;

  struct TrialOut {
    double stifme = 0.0;
    std::vector<std::vector<double>> by_pass;  // schedule x pass
  };
  std::vector<TrialOut> out(config.trials);

  for_each_trial(config.trials, config.threads, [&](std::size_t trial) {
    Rng rng = substream(seed, trial);
    const std::vector<StiefelPoint> xs = gaussian::sample(params, config.samples, rng);
    const std::uint64_t sgd_seed = rng();
    const std::span<const StiefelPoint> all(xs);
    const FrechetMeanResult one_pass = estimators::ifme(all);
    estimators::BatchOptions tight;
    tight.tol = 1e-12;
    tight.max_iter = 10000;
    const gaussian::Frame target(estimators::batch_fm(all, one_pass.estimate, tight).estimate);
    TrialOut& o = out[trial];
    o.stifme = target.distance_to(one_pass.estimate);
    for (std::size_t s = 0; s < n_sgd; ++s) {
      estimators::SgdConfig sc;
      sc.a = config.sgd_a[s];
      sc.b = config.sgd_b;
      sc.passes = max_passes;
      sc.seed = substream_seed(sgd_seed, s);
      const estimators::SgdResult r = estimators::sgd_fm(all, sc, xs.front());
      std::vector<double> errs;
      for (const StiefelPoint& w : r.pass_estimates) errs.push_back(target.distance_to(w));
      o.by_pass.push_back(std::move(errs));
    }
  });

  SgdComparison cmp;
  const double trials = static_cast<double>(config.trials);
  for (const TrialOut& o : out) cmp.stifme_error += o.stifme / trials;
  for (std::size_t s = 0; s < n_sgd; ++s) {
    SgdComparison::Schedule sch;
    sch.a = config.sgd_a[s];
    sch.error_by_pass.assign(max_passes, 0.0);
    for (const TrialOut& o : out) {
      std::size_t match = max_passes + 1;
      for (std::size_t k = 0; k < max_passes; ++k) {
        sch.error_by_pass[k] += o.by_pass[s][k] / trials;
        if (match > max_passes && o.by_pass[s][k] <= o.stifme) match = k + 1;
      }
      sch.mean_passes_to_match += static_cast<double>(match) / trials;
      if (match <= max_passes) sch.matched_fraction += 1.0 / trials;
    }
    sch.one_pass_error = sch.error_by_pass.front();
    cmp.schedules.push_back(std::move(sch));
  }
  return cmp;
}

// ---------------------------------------------------------------------------

std::vector<StiefelPoint> synthetic_geodesic(Eigen::Index n, Eigen::Index p, std::size_t count, double spread,
                                             Rng& rng) {
  if (!(spread > 0.0) || !(spread < stiefel::kRegularBallRadius)) config_error("spread must lie in (0, pi/(2 sqrt 2))");
  const StiefelPoint m = stiefel::random_haar(n, p, rng);
  const SkewLift dir = random_direction(n, p, rng);
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<StiefelPoint> xs;
  xs.reserve(count);
  if (count % 2 == 1) xs.push_back(m);
  while (xs.size() < count) {
    const double t = u(rng);
    xs.push_back(stiefel::retract(m, dir.scaled(t)));
    xs.push_back(stiefel::retract(m, dir.scaled(-t)));
  }
  return xs;
}

SyntheticClusters synthetic_clusters(Eigen::Index n, Eigen::Index p, std::size_t clusters, std::size_t per_cluster,
                                     double sigma, double min_separation, Rng& rng) {
  if (clusters < 1 || per_cluster < 1) config_error("clusters and per_cluster must be positive");
  const StiefelPoint base = reference_mean(n, p);
  std::uniform_real_distribution<double> radius(0.3, 0.8);
  SyntheticClusters out;
  std::size_t attempts = 0;
  while (out.centers.size() < clusters) {
    if (++attempts > 100000) {
      throw Error(ErrorCode::ScaleTooLarge, "cannot place " + std::to_string(clusters) + " centers " +
                                                format_double(min_separation) + " apart");
    }
    const StiefelPoint c = stiefel::retract(base, random_direction(n, p, rng).scaled(radius(rng)));
    const bool far = std::all_of(out.centers.begin(), out.centers.end(), [&](const StiefelPoint& o) {
      return stiefel::in_neighborhood(o, c) ? stiefel::distance(o, c) > min_separation : true;
    });
    if (far) out.centers.push_back(c);
  }
  for (std::size_t k = 0; k < clusters; ++k) {
    const gaussian::GaussianParams params(out.centers[k], sigma);
    for (StiefelPoint& x : gaussian::sample(params, per_cluster, rng)) {
      out.points.push_back(std::move(x));
      out.truth.push_back(k);
    }
  }
  return out;
}

SyntheticArma synthetic_arma(Eigen::Index d, Eigen::Index p, std::size_t t, double noise, Rng& rng) {
  if (p < 1 || d < p) config_error("synthetic ARMA needs d >= p >= 1");
  if (t < static_cast<std::size_t>(p) + 1) config_error("synthetic ARMA needs T > p");
  if (!(noise >= 0.0)) config_error("noise must be non-negative");
  std::uniform_real_distribution<double> modulus(0.9, 0.99);
  std::uniform_real_distribution<double> angle(0.1, std::numbers::pi - 0.1);
  Matrix blocks = Matrix::Zero(p, p);
  Eigen::Index i = 0;
  for (; i + 1 < p; i += 2) {
    const double r = modulus(rng);
    const double th = angle(rng);
    blocks(i, i) = r * std::cos(th);
    blocks(i, i + 1) = -r * std::sin(th);
    blocks(i + 1, i) = r * std::sin(th);
    blocks(i + 1, i + 1) = r * std::cos(th);
  }
  if (i < p) blocks(i, i) = modulus(rng);
  const Matrix q = stiefel::random_haar(p, p, rng).matrix();

  SyntheticArma out;
  out.a = q * blocks * q.transpose();
  out.c = stiefel::random_haar(d, p, rng).matrix();
  out.features.resize(d, static_cast<Eigen::Index>(t));
  Vector z = standard_normal(p, 1, rng);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(t); ++k) {
    out.features.col(k) = out.c * z;
    z = out.a * z;
  }
  if (noise > 0.0) out.features += noise * standard_normal(d, static_cast<Eigen::Index>(t), rng);
  return out;
}

double eigenvalue_error(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
  if (a.size() != b.size() || a.size() > 8) throw Error(ErrorCode::ShapeMismatch, "eigenvalue_error needs equal sizes <= 8");
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[perm[i]]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return a.empty() ? 0.0 : best;
}

std::vector<StiefelPoint> vcg_surrogate(Rng& rng, std::size_t count) {
  const StiefelPoint m = stiefel::random_haar(3, 2, rng);
  const Eigen::Index dim = stiefel::manifold_dimension(3, 2);
  const Matrix basis = matkit::orthonormalize(standard_normal(dim, dim, rng));
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<StiefelPoint> xs;
  xs.reserve(count);
  while (xs.size() < count) {
    const Vector coords = 0.30 * g(rng) * basis.col(0) + 0.15 * g(rng) * basis.col(1) + 0.02 * g(rng) * basis.col(2);
    if (coords.norm() >= 1.0) continue;
    xs.push_back(stiefel::retract(m, SkewLift::unflatten(3, 2, coords)));
  }
  return xs;
}

// ---------------------------------------------------------------------------

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "estimator,N,mean_error,mean_wall_time,passes,seed\n";
  for (const BenchRow& r : rows) {
    out << r.estimator << ',' << r.n << ',' << format_double(r.mean_error) << ',' << format_double(r.mean_wall_time)
        << ',' << format_double(r.passes) << ',' << r.seed << '\n';
  }
}

void write_trace_csv(const std::vector<TraceRow>& rows, std::ostream& out) {
  out << "estimator,k,error,elapsed\n";
  for (const TraceRow& r : rows) {
    out << r.estimator << ',' << r.k << ',' << format_double(r.error) << ',' << format_double(r.elapsed) << '\n';
  }
}

void write_tolerance_csv(const std::vector<ToleranceRow>& rows, std::ostream& out) {
  out << "estimator,tolerance,mean_time,reached\n";
  for (const ToleranceRow& r : rows) {
    out << r.estimator << ',' << format_double(r.tolerance) << ',' << format_double(r.mean_time) << ','
        << format_double(r.reached) << '\n';
  }
}

void write_sgd_csv(const SgdComparison& cmp, std::ostream& out) {
  out << "a,pass,mean_error,stifme_error,mean_passes_to_match,matched_fraction\n";
  for (const auto& s : cmp.schedules) {
    for (std::size_t k = 0; k < s.error_by_pass.size(); ++k) {
      out << format_double(s.a) << ',' << k + 1 << ',' << format_double(s.error_by_pass[k]) << ','
          << format_double(cmp.stifme_error) << ',' << format_double(s.mean_passes_to_match) << ','
          << format_double(s.matched_fraction) << '\n';
    }
  }
}

void write_gof_csv(const gaussian::GofReport& report, std::ostream& out) {
  out << "lower,upper,observed,expected\n";
  for (const gaussian::GofBin& b : report.bins) {
    out << format_double(b.lower) << ',' << format_double(b.upper) << ',' << format_double(b.observed) << ','
        << format_double(b.expected) << '\n';
  }
}

void write_spectrum_csv(const mstats::PgaModel& model, std::ostream& out) {
  out << "component,variance,explained_ratio,cumulative_ratio\n";
  double cum = 0.0;
  for (Eigen::Index i = 0; i < model.explained_variance.size(); ++i) {
    const double share = model.total_variance > 0.0 ? model.explained_variance(i) / model.total_variance : 0.0;
    cum += share;
    out << i + 1 << ',' << format_double(model.explained_variance(i)) << ',' << format_double(share) << ','
        << format_double(cum) << '\n';
  }
}

}  // namespace sfm::harness
