// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "sfm/errors.hpp"
#include "sfm/estimators.hpp"
#include "sfm/gaussian.hpp"
#include "sfm/grassmann.hpp"
#include "sfm/harness.hpp"
#include "sfm/mstats.hpp"

using namespace sfm;
using matkit::Matrix;
using matkit::Vector;
using stiefel::SkewLift;
using stiefel::StiefelPoint;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

SkewLift random_lift(Eigen::Index n, Eigen::Index p, double norm, Rng& rng) {
  const Vector v = standard_normal(stiefel::manifold_dimension(n, p), 1, rng);
  return SkewLift::unflatten(n, p, v * (norm / v.norm()));
}

StiefelPoint circle(double a) {
  Matrix m(2, 1);
  m << std::cos(a), std::sin(a);
  return StiefelPoint(m);
}

// ---------------------------------------------------------------------------

Outcome geometry_roundtrip() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::uniform_real_distribution<double> radius(0.0, stiefel::kRegularBallRadius);
  double worst_roundtrip = 0.0;
  double worst_ortho = 0.0;
  for (auto [n, p] : {std::pair<Eigen::Index, Eigen::Index>{50, 10}, {3, 2}}) {
    for (int t = 0; t < 1000; ++t) {
      const StiefelPoint x = stiefel::random_haar(n, p, rng);
      const StiefelPoint y = stiefel::retract(x, random_lift(n, p, radius(rng), rng));
      worst_ortho = std::max(worst_ortho, matkit::orthonormality_error(y.matrix()));
      if (!stiefel::in_neighborhood(x, y)) continue;
      const StiefelPoint back = stiefel::retract(x, stiefel::lift(x, y));
      worst_roundtrip = std::max(worst_roundtrip, (back.matrix() - y.matrix()).norm());
      worst_ortho = std::max(worst_ortho, matkit::orthonormality_error(back.matrix()));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_roundtrip < 1e-8 && worst_ortho < 1e-10 && secs < 10.0,
          fmt("max roundtrip error %.2e (< 1e-8), max orthonormality error %.2e (< 1e-10), %.2f s (< 10 s)",
              worst_roundtrip, worst_ortho, secs)};
}

Outcome circle_oracle() {
  const StiefelPoint x = circle(0.0);
  const StiefelPoint y = circle(std::numbers::pi / 2);
  const SkewLift w = stiefel::lift(x, y);
  Matrix quarter(2, 2);
  quarter << 0, -1, 1, 0;
  const StiefelPoint mid = stiefel::geodesic_point(x, y, 0.5);
  const double errs[] = {
      std::abs(w.b()(0, 0) - 1.0) + std::abs(w.c()(0, 0)),
      std::abs(stiefel::distance(x, y) - std::sqrt(2.0)),
      (stiefel::cayley(w) - quarter).cwiseAbs().maxCoeff(),
      std::abs(std::atan2(mid.matrix()(1, 0), mid.matrix()(0, 0)) - 2.0 * std::atan(0.5)),
  };
  const double worst = *std::max_element(std::begin(errs), std::end(errs));
  return {worst < 1e-12, fmt("b error %.1e, distance error %.1e, Cayley error %.1e, midpoint angle error %.1e (< 1e-12)",
                             errs[0], errs[1], errs[2], errs[3])};
}

Outcome grassmann_consistency() {
  Rng rng(303);
  std::uniform_real_distribution<double> ang(0.0, std::numbers::pi / 2);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const StiefelPoint o = stiefel::random_haar(10, 3, rng);
    const Matrix proj = Matrix::Identity(10, 10) - o.matrix() * o.matrix().transpose();
    const Matrix u = matkit::orthonormalize(proj * standard_normal(10, 3, rng));
    const Matrix v = stiefel::random_haar(3, 3, rng).matrix();
    Vector theta(3);
    for (int i = 0; i < 3; ++i) theta(i) = ang(rng);
    const grassmann::HorizontalTangent w =
        grassmann::HorizontalTangent::project(o, u * theta.asDiagonal() * v.transpose());
    const double d = grassmann::principal_angle_distance(o, grassmann::horiz_exp(o, w));
    worst = std::max(worst, std::abs(d - w.angles().norm()));
  }
  return {worst < 1e-8, fmt("max |d(O, Exp_O(W)) - ||Theta|||  = %.2e over 1000 trials on Gr(3,10) (< 1e-8)", worst)};
}

Outcome normalizer_constancy() {
  const auto t0 = Clock::now();
  Rng anchors(404);
  std::vector<gaussian::NormalizerEstimate> est;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const StiefelPoint m = stiefel::random_haar(4, 2, anchors);
    Rng rng = substream(4040, i);
    est.push_back(gaussian::estimate_normalizer(0.3, 4, 2, 100000, rng, m));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i)
    for (std::size_t j = i + 1; j < est.size(); ++j) {
      const double se = std::hypot(est[i].std_error, est[j].std_error);
      worst = std::max(worst, std::abs(est[i].value - est[j].value) / se);
    }
  const double secs = seconds_since(t0);
  return {worst < 3.0 && secs < 60.0,
          fmt("Z ~ %.5f +- %.5f; worst pairwise gap %.2f combined SE (< 3), %.1f s (< 60 s)", est[0].value,
              est[0].std_error, worst, secs)};
}

Outcome sampler_gof() {
  const gaussian::GaussianParams params(StiefelPoint::origin(2, 1), 0.3);
  const gaussian::Frame origin(params.mean());
  int passes = 0;
  double min_p = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = substream(505, seed);
    std::vector<double> d;
    for (const StiefelPoint& x : gaussian::sample(params, 10000, rng)) d.push_back(origin.distance_to(x));
    const double p = gaussian::gof_halfnormal(d, 0.3, 20, params.support_radius()).p_value;
    min_p = std::min(min_p, p);
    if (p > 0.05) ++passes;
  }
  return {passes >= 18, fmt("%d of 20 seeds with p > 0.05 (need >= 18), smallest p = %.3f", passes, min_p)};
}

Outcome consistency() {
  const auto t0 = Clock::now();
  harness::ExperimentConfig c;
  c.n = 50;
  c.p = 10;
  c.sigma = 0.25;
  c.trials = 100;
  c.seed = 606;
  c.grid = {10, 100, 1000};
  c.sgd_a = {1.0};
  const harness::BenchReport r = harness::bench_fm(c);
  std::vector<double> stifme;
  double stfme_final = 0.0;
  for (const harness::BenchRow& row : r.rows) {
    if (row.estimator == "StiFME") stifme.push_back(row.mean_error);
    if (row.estimator == "StFME" && row.n == 1000) stfme_final = row.mean_error;
  }
  const bool decreasing = stifme[0] > stifme[1] && stifme[1] > stifme[2];
  const bool decay = stifme[2] < stifme[0] / 3.0;
  const bool close = stifme[2] <= 2.0 * stfme_final;
  const double secs = seconds_since(t0);
  return {decreasing && decay && close && secs < 300.0,
          fmt("StiFME error %.4f / %.4f / %.4f at N = 10/100/1000, StFME %.4f at N = 1000 (ratio %.3f <= 2), %.0f s "
              "(< 300 s)",
              stifme[0], stifme[1], stifme[2], stfme_final, stifme[2] / stfme_final, secs)};
}

/// Smallest of `reps` timings of fn().
double best_time(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

Outcome performance() {
  Rng rng(707);
  const gaussian::GaussianParams params(StiefelPoint::origin(50, 10), 0.25);
  const std::vector<StiefelPoint> xs = gaussian::sample(params, 1000, rng);
  const std::span<const StiefelPoint> all(xs);
  const double t_ifme_1000 = best_time(5, [&] { (void)estimators::ifme(all); });
  const double t_ifme_100 = best_time(5, [&] { (void)estimators::ifme(all.first(100)); });
  const double t_batch = best_time(1, [&] { (void)estimators::batch_fm_incremental(all); });
  const double speedup = t_batch / t_ifme_1000;
  const double per_100 = t_ifme_100 / 100.0;
  const double per_1000 = t_ifme_1000 / 1000.0;
  const double flat = std::max(per_100, per_1000) / std::min(per_100, per_1000);
  return {speedup >= 5.0 && flat <= 2.0,
          fmt("incremental N = 1000: StiFME %.3f s vs warm-start batch %.2f s (speedup %.0fx >= 5x); per-sample "
              "%.1f us at N = 100 vs %.1f us at N = 1000 (ratio %.2f <= 2)",
              t_ifme_1000, t_batch, speedup, per_100 * 1e6, per_1000 * 1e6, flat)};
}

Outcome sgd_comparison() {
  harness::ExperimentConfig c;
  c.n = 50;
  c.p = 10;
  c.sigma = 0.05;
  c.samples = 100;
  c.trials = 100;
  c.seed = 808;
  c.sgd_max_passes = 64;
  const harness::SgdComparison cmp = harness::sgd_compare(c);
  bool ok = true;
  std::string detail = fmt("StiFME one-pass error %.2e;", cmp.stifme_error);
  for (const auto& s : cmp.schedules) {
    bool monotone = true;
    for (std::size_t k = 1; k < s.error_by_pass.size(); ++k) monotone = monotone && s.error_by_pass[k] <= s.error_by_pass[k - 1];
    const bool beaten = cmp.stifme_error < s.one_pass_error;
    const bool more = s.mean_passes_to_match > 1.0;
    ok = ok && beaten && more && monotone;
    detail += fmt(" a=%g: one-pass %.2e, passes to match %.1f%s, %s;", s.a, s.one_pass_error, s.mean_passes_to_match,
                  s.matched_fraction < 1.0 ? fmt(" (unmatched trials count as %zu)", c.sgd_max_passes + 1).c_str() : "",
                  monotone ? "monotone" : "NOT monotone");
  }
  return {ok, detail};
}

Outcome crlb() {
  const auto t0 = Clock::now();
  const StiefelPoint mean = StiefelPoint::origin(3, 1);
  const double sigma = 0.1;
  const gaussian::GaussianParams params(mean, sigma);
  std::vector<StiefelPoint> estimates;
  for (std::uint64_t t = 0; t < 500; ++t) {
    Rng rng = substream(909, t);
    const std::vector<StiefelPoint> xs = gaussian::sample(params, 200, rng);
    estimates.push_back(estimators::batch_fm(xs, estimators::ifme(xs).estimate).estimate);
  }
  const double ratio = 200.0 * estimators::estimator_variance(estimates, mean) * estimators::fisher_information(params);
  const double secs = seconds_since(t0);
  return {ratio >= 0.7 && ratio <= 1.3 && secs < 120.0,
          fmt("N Var / sigma^2 = %.3f (in [0.7, 1.3]), %.1f s (< 120 s)", ratio, secs)};
}

Outcome pga() {
  Rng rng(1010);
  const std::vector<StiefelPoint> xs = harness::synthetic_geodesic(10, 3, 101, 0.5, rng);
  const Eigen::Index dim = stiefel::manifold_dimension(10, 3);
  const mstats::PgaModel m = mstats::pga_fit(xs, dim);
  double recon = 0.0;
  for (const StiefelPoint& x : xs) recon = std::max(recon, (mstats::pga_reconstruct(m, x, dim).matrix() - x.matrix()).norm());
  bool ok = m.explained_ratio(1) >= 0.99 && recon < 1e-8;
  std::string detail = fmt("geodesic data: first component %.4f (>= 0.99), full-rank reconstruction %.1e (< 1e-8);",
                           m.explained_ratio(1), recon);

  const std::filesystem::path vcg = std::filesystem::path(SFM_SOURCE_DIR) / "data" / "vcg.bundle";
  std::vector<StiefelPoint> frames;
  if (std::filesystem::exists(vcg)) {
    frames = harness::load_bundle(vcg).points();
    detail += " cardiogram bundle:";
  } else {
    Rng srng(1011);
    frames = harness::vcg_surrogate(srng);
    detail += " cardiogram bundle absent (data/vcg.bundle), surrogate:";
  }
  const mstats::PgaModel v = mstats::pga_fit(frames, 3);
  double err = 0.0;
  for (const StiefelPoint& x : frames) err += (mstats::pga_reconstruct(v, x, 2).matrix() - x.matrix()).norm();
  err /= static_cast<double>(frames.size());
  ok = ok && v.explained_ratio(2) > 0.9 && err <= 0.10;
  detail += fmt(" two components %.3f (> 0.9), mean reconstruction error %.3f (<= 0.10)", v.explained_ratio(2), err);
  return {ok, detail};
}

Outcome kmeans() {
  auto run = [] {
    Rng rng(1111);
    const harness::SyntheticClusters sc = harness::synthetic_clusters(50, 10, 3, 50, 0.05, 0.5, rng);
    std::vector<mstats::ProductPoint> pts;
    for (const StiefelPoint& x : sc.points) pts.push_back({x, std::nullopt, {}});
    mstats::KMeansOptions opts;
    opts.k = 3;
    opts.seed = 1112;
    const mstats::KMeansResult r = mstats::kmeans(pts, opts);
    return std::pair{r.labels, mstats::clustering_accuracy(r.labels, sc.truth, 3)};
  };
  const auto a = run();
  const auto b = run();
  const bool deterministic = a.first == b.first;
  return {a.second == 1.0 && deterministic,
          fmt("accuracy %.4f (= 1), repeat run %s", a.second, deterministic ? "identical" : "DIFFERENT")};
}

Outcome arma() {
  Rng rng(1212);
  const harness::SyntheticArma sys = harness::synthetic_arma(20, 3, 200, 0.0, rng);
  const mstats::ArmaModel m = mstats::arma_decompose(sys.features, 3);
  const double span = grassmann::principal_angle_distance(m.c, StiefelPoint(sys.c));
  Eigen::EigenSolver<Matrix> es(sys.a, false);
  const std::vector<std::complex<double>> want(es.eigenvalues().data(), es.eigenvalues().data() + 3);
  const double eig = harness::eigenvalue_error(m.eigenvalues(), want);
  return {span < 1e-6 && eig < 1e-6, fmt("span error %.1e (< 1e-6), eigenvalue error %.1e (< 1e-6)", span, eig)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"geometry roundtrip", geometry_roundtrip},
      {"circle oracle", circle_oracle},
      {"Grassmann consistency", grassmann_consistency},
      {"normalizer constancy", normalizer_constancy},
      {"sampler goodness of fit", sampler_gof},
      {"consistency", consistency},
      {"performance", performance},
      {"SGD comparison", sgd_comparison},
      {"Cramer-Rao bound", crlb},
      {"PGA", pga},
      {"k-means", kmeans},
      {"ARMA recovery", arma},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
