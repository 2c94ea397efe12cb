#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sfm/errors.hpp"
#include "sfm/estimators.hpp"
#include "support.hpp"

using namespace sfm;
using namespace sfm::estimators;
using sfm::testing::circle;

namespace {

std::vector<StiefelPoint> gaussian_data(Eigen::Index n, Eigen::Index p, double sigma, std::size_t count,
                                        std::uint64_t seed) {
  Rng rng(seed);
  return gaussian::sample(gaussian::GaussianParams(StiefelPoint::origin(n, p), sigma), count, rng);
}

double angle(const StiefelPoint& x) { return std::atan2(x.matrix()(1, 0), x.matrix()(0, 0)); }

}  // namespace

TEST(IfmeStep, FirstStepIsMidpoint) {
  Rng rng(1);
  const StiefelPoint x1 = stiefel::random_haar(6, 2, rng);
  const StiefelPoint x2 = sfm::testing::random_neighbor(x1, 0.7, rng);
  EXPECT_LT((ifme_step(x1, x2, 1).matrix() - stiefel::geodesic_point(x1, x2, 0.5).matrix()).norm(), 1e-14);
}

TEST(IfmeStep, ZeroStep) {
  Rng rng(2);
  const StiefelPoint m = stiefel::random_haar(6, 2, rng);
  EXPECT_LT((ifme_step(m, m, 5).matrix() - m.matrix()).norm(), 1e-14);
}

TEST(IfmeStep, VanishingWeight) {
  const StiefelPoint m = circle(0.0);
  const StiefelPoint x = circle(0.5);
  double prev = 1.0;
  for (std::size_t k : {1u, 10u, 100u, 1000u, 100000u}) {
    const double d = stiefel::distance(m, ifme_step(m, x, k));
    ASSERT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(IfmeStep, OutOfNeighborhoodNamesStep) {
  try {
    ifme_step(circle(0.0), circle(std::numbers::pi), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfNeighborhood);
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

TEST(Ifme, SinglePoint) {
  Rng rng(3);
  const std::vector<StiefelPoint> xs = {stiefel::random_haar(5, 2, rng)};
  EXPECT_EQ(ifme(xs).estimate.matrix(), xs[0].matrix());
}

TEST(Ifme, TwoPoints) {
  Rng rng(4);
  const StiefelPoint a = stiefel::random_haar(5, 2, rng);
  const std::vector<StiefelPoint> xs = {a, sfm::testing::random_neighbor(a, 0.5, rng)};
  EXPECT_LT((ifme(xs).estimate.matrix() - stiefel::geodesic_point(xs[0], xs[1], 0.5).matrix()).norm(), 1e-14);
}

TEST(Ifme, SkipsAndLogsOutOfNeighborhood) {
  const std::vector<StiefelPoint> xs = {circle(0.0), circle(std::numbers::pi), circle(0.2)};
  const FrechetMeanResult r = ifme(xs);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0], 1u);
  EXPECT_EQ(r.steps, 2u);
}

TEST(Ifme, StreamingMatchesBatchCall) {
  const auto xs = gaussian_data(8, 3, 0.3, 100, 5);
  InductiveMean m;
  for (const StiefelPoint& x : xs) m.push(x);
  EXPECT_EQ(m.estimate().matrix(), ifme(xs).estimate.matrix());
  EXPECT_EQ(m.count(), 100u);
}

TEST(Ifme, RunningAverageOnCircle) {
  // On St(1,2) the tangent coordinate is tan(angle/2); for small spread the
  // recursion tracks the running mean of the angles to O(sigma^2).
  Rng rng(6);
  std::normal_distribution<double> g(0.0, 0.01);
  std::vector<StiefelPoint> xs;
  double sum = 0.0;
  InductiveMean m;
  for (int k = 1; k <= 500; ++k) {
    const double a = g(rng);
    sum += a;
    m.push(circle(a));
    ASSERT_NEAR(angle(m.estimate()), sum / k, 1e-4);
  }
}

TEST(Ifme, TraceCheckpoints) {
  const auto xs = gaussian_data(6, 2, 0.3, 50, 7);
  IfmeOptions opts;
  opts.reference = StiefelPoint::origin(6, 2);
  opts.checkpoints = {10, 50};
  const FrechetMeanResult r = ifme(xs, opts);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[0].k, 10u);
  EXPECT_EQ(r.trace[1].k, 50u);
  EXPECT_NEAR(r.trace[1].error_to_reference, gaussian::distance_to_mean(*opts.reference, r.estimate), 1e-15);
  EXPECT_LE(r.trace[0].elapsed, r.trace[1].elapsed);
}

TEST(BatchFm, AllEqual) {
  Rng rng(8);
  const StiefelPoint x = stiefel::random_haar(5, 2, rng);
  const std::vector<StiefelPoint> xs(4, x);
  const FrechetMeanResult r = batch_fm(xs, x);
  EXPECT_LE(r.steps, 1u);
  EXPECT_LT((r.estimate.matrix() - x.matrix()).norm(), 1e-14);
}

TEST(BatchFm, CircleFirstOrderOptimality) {
  const std::vector<StiefelPoint> xs = {circle(-0.3), circle(0.9)};
  const FrechetMeanResult r = batch_fm(xs, xs[0]);
  ASSERT_TRUE(r.converged);
  const double g = (stiefel::lift(r.estimate, xs[0]) + stiefel::lift(r.estimate, xs[1])).norm();
  EXPECT_LT(g, 2.0 * 1e-8);
  EXPECT_LT(r.gradient_norm, 1e-8);
}

TEST(BatchFm, OptimalityProperty) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto xs = gaussian_data(10, 3, 0.4, 60, 100 + seed);
    const FrechetMeanResult r = batch_fm(xs, xs.front());
    ASSERT_TRUE(r.converged);
    stiefel::SkewLift sum = stiefel::SkewLift::zero(10, 3);
    for (const StiefelPoint& x : xs) sum = sum + stiefel::lift(r.estimate, x);
    ASSERT_LT(sum.norm() / xs.size(), 1e-8);
    ASSERT_LE(fm_objective(xs, r.estimate), fm_objective(xs, ifme(xs).estimate) + 1e-12);
  }
}

TEST(BatchFm, CloseToIfme) {
  const auto xs = gaussian_data(50, 10, 0.25, 300, 9);
  const FrechetMeanResult b = batch_fm(xs, xs.front());
  const FrechetMeanResult i = ifme(xs);
  const StiefelPoint o = StiefelPoint::origin(50, 10);
  EXPECT_LT(stiefel::distance(b.estimate, i.estimate), 0.5 * gaussian::distance_to_mean(o, b.estimate));
}

TEST(BatchFmIncremental, MatchesFinalBatch) {
  const auto xs = gaussian_data(6, 2, 0.3, 40, 10);
  const FrechetMeanResult inc = batch_fm_incremental(xs);
  const FrechetMeanResult b = batch_fm(xs, xs.front());
  EXPECT_LT(stiefel::distance(inc.estimate, b.estimate), 1e-7);
}

TEST(Sgd, ReproducesIfme) {
  const auto xs = gaussian_data(7, 3, 0.3, 80, 11);
  SgdConfig c;
  c.visitation = Visitation::ordered;
  const SgdResult s = sgd_fm(xs, c, xs.front());
  EXPECT_LT((s.fm.estimate.matrix() - ifme(xs).estimate.matrix()).norm(), 1e-12);
}

TEST(Sgd, Validation) {
  SgdConfig c;
  c.b = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c.b = 1.0;
  c.a = -1.0;
  EXPECT_THROW(c.validate(), Error);
  c.a = 1.0;
  c.passes = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Sgd, StepContinuesAcrossPasses) {
  SgdConfig c;
  c.a = 2.0;
  c.b = 3.0;
  EXPECT_DOUBLE_EQ(c.step(0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.step(7), 0.2);
}

TEST(Sgd, PassEstimatesAndSeeds) {
  const auto xs = gaussian_data(6, 2, 0.3, 30, 12);
  SgdConfig c;
  c.passes = 3;
  c.seed = 5;
  const SgdResult a = sgd_fm(xs, c, xs.front());
  const SgdResult b = sgd_fm(xs, c, xs.front());
  ASSERT_EQ(a.pass_estimates.size(), 3u);
  EXPECT_EQ(a.fm.steps, 90u);
  EXPECT_EQ(a.fm.estimate.matrix(), b.fm.estimate.matrix());
  c.seed = 6;
  EXPECT_NE(sgd_fm(xs, c, xs.front()).fm.estimate.matrix(), a.fm.estimate.matrix());
}

TEST(Fisher, Values) {
  const StiefelPoint o = StiefelPoint::origin(3, 1);
  EXPECT_NEAR(fisher_information(gaussian::GaussianParams(o, 0.1)), 100.0, 1e-12);
  EXPECT_DOUBLE_EQ(fisher_information(gaussian::GaussianParams(o, 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(fisher_information(gaussian::GaussianParams(o, 2.0)), 0.25);
}

TEST(EstimatorVariance, ZeroAndInsufficient) {
  const StiefelPoint o = StiefelPoint::origin(4, 2);
  const std::vector<StiefelPoint> same(3, o);
  EXPECT_EQ(estimator_variance(same, o), 0.0);
  const std::vector<StiefelPoint> one(1, o);
  try {
    estimator_variance(one, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(EstimatorVariance, HalvesWhenNDoubles) {
  const StiefelPoint o = StiefelPoint::origin(3, 1);
  std::vector<StiefelPoint> e100;
  std::vector<StiefelPoint> e200;
  for (std::uint64_t t = 0; t < 300; ++t) {
    const auto xs = gaussian_data(3, 1, 0.1, 200, 5000 + t);
    e100.push_back(ifme(std::span(xs).first(100)).estimate);
    e200.push_back(ifme(xs).estimate);
  }
  const double ratio = estimator_variance(e100, o) / estimator_variance(e200, o);
  EXPECT_GT(ratio, 1.6);
  EXPECT_LT(ratio, 2.5);
}

TEST(Ifme, PermutationSensitivityIsSmall) {
  auto xs = gaussian_data(10, 3, 0.25, 1000, 13);
  const StiefelPoint a = ifme(xs).estimate;
  Rng rng(14);
  std::shuffle(xs.begin(), xs.end(), rng);
  const StiefelPoint b = ifme(xs).estimate;
  // Monte-Carlo standard error of the mean: sigma / sqrt(N).
  EXPECT_LT(stiefel::distance(a, b), 3.0 * 0.25 / std::sqrt(1000.0));
}
