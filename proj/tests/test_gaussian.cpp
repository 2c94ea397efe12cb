#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sfm/errors.hpp"
#include "sfm/gaussian.hpp"
#include "support.hpp"

using namespace sfm;
using namespace sfm::gaussian;
using sfm::testing::circle;

TEST(GaussianParams, Validation) {
  const StiefelPoint o = StiefelPoint::origin(3, 2);
  EXPECT_THROW(GaussianParams(o, 0.0), Error);
  EXPECT_THROW(GaussianParams(o, -1.0), Error);
  EXPECT_THROW(GaussianParams(o, 0.3, 0.0), Error);
  EXPECT_NO_THROW(GaussianParams(o, 0.3));
}

TEST(LogKernel, AtMeanIsZero) {
  Rng rng(1);
  const StiefelPoint m = stiefel::random_haar(6, 2, rng);
  EXPECT_NEAR(log_kernel(GaussianParams(m, 0.4), m), 0.0, 1e-24);
}

TEST(LogKernel, CircleValue) {
  const GaussianParams params(circle(0.0), 1.0, 2.0);
  EXPECT_NEAR(log_kernel(params, circle(std::numbers::pi / 2)), -1.0, 1e-12);
}

TEST(LogKernel, ScaleLaw) {
  const StiefelPoint x = circle(0.5);
  const double a = log_kernel(GaussianParams(circle(0.0), 0.3), x);
  const double b = log_kernel(GaussianParams(circle(0.0), 0.6), x);
  EXPECT_NEAR(b, a / 4.0, 1e-14);
}

TEST(LogKernel, OutsideSupport) {
  const GaussianParams params(circle(0.0), 1.0);
  EXPECT_EQ(log_kernel(params, circle(std::numbers::pi / 2)), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(log_kernel(params, circle(std::numbers::pi)), -std::numeric_limits<double>::infinity());
}

TEST(FrameCompletion, OriginIsIdentity) {
  const Matrix r = frame_completion(StiefelPoint::origin(5, 2));
  EXPECT_LT((r.leftCols(2) - Matrix::Identity(5, 2)).norm(), 1e-15);
}

TEST(FrameCompletion, ProperRotationProperty) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const StiefelPoint x = stiefel::random_haar(6, 1 + t % 6, rng);
    const Matrix r = frame_completion(x);
    ASSERT_LT((r.leftCols(x.p()) - x.matrix()).norm(), 1e-12);
    ASSERT_LT((r.transpose() * r - Matrix::Identity(6, 6)).norm(), 1e-12);
    if (x.p() < x.n()) {
      ASSERT_NEAR(r.determinant(), 1.0, 1e-12);
    }
  }
}

TEST(Sample, DegenerateScale) {
  Rng rng(3);
  const StiefelPoint m = stiefel::random_haar(5, 2, rng);
  for (const StiefelPoint& x : sample(GaussianParams(m, 1e-6), 50, rng)) {
    ASSERT_LT((x.matrix() - m.matrix()).norm(), 1e-5);
    ASSERT_LT(distance_to_mean(m, x), 1e-5);
  }
}

TEST(Sample, SupportAndOrthonormality) {
  Rng rng(4);
  const StiefelPoint m = stiefel::random_haar(8, 3, rng);
  const GaussianParams params(m, 0.9);
  for (const StiefelPoint& x : sample(params, 2000, rng)) {
    ASSERT_LT(distance_to_mean(m, x), params.support_radius());
    ASSERT_LT(matkit::orthonormality_error(x.matrix()), 1e-10);
  }
}

TEST(Sample, SecondMomentMatchesSigma) {
  Rng rng(5);
  const double sigma = 0.25;
  const StiefelPoint m = StiefelPoint::origin(50, 10);
  double acc = 0.0;
  const auto xs = sample(GaussianParams(m, sigma), 400, rng);
  for (const StiefelPoint& x : xs) acc += std::pow(distance_to_mean(m, x), 2);
  EXPECT_NEAR(acc / xs.size(), sigma * sigma, 0.05 * sigma * sigma);
}

TEST(Sample, Deterministic) {
  const GaussianParams params(StiefelPoint::origin(6, 2), 0.3);
  Rng a(6);
  Rng b(6);
  const auto xa = sample(params, 20, a);
  const auto xb = sample(params, 20, b);
  for (std::size_t i = 0; i < xa.size(); ++i) ASSERT_EQ(xa[i].matrix(), xb[i].matrix());
}

TEST(Sample, IsometryEquivariance) {
  Rng rng(7);
  const StiefelPoint m = stiefel::random_haar(7, 3, rng);
  const Matrix g = stiefel::random_haar(7, 7, rng).matrix();
  const StiefelPoint gm(g * m.matrix());
  const auto xs = sample(GaussianParams(m, 0.4), 200, rng);
  for (const StiefelPoint& x : xs) {
    ASSERT_NEAR(distance_to_mean(gm, StiefelPoint(g * x.matrix())), distance_to_mean(m, x), 1e-9);
  }
}

TEST(Sample, HorizontalOnlyLeavesFrameBlock) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    SamplerOptions opts;
    opts.horizontal_only = true;
    const stiefel::SkewLift w = sample_origin_tangent(6, 3, 0.5, 1.0, rng, opts);
    ASSERT_EQ(w.c().norm(), 0.0);
  }
}

TEST(Sample, ScaleTooLarge) {
  Rng rng(9);
  SamplerOptions opts;
  opts.max_draws = 20;
  try {
    sample(GaussianParams(StiefelPoint::origin(10, 3), 100.0), 1, rng, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScaleTooLarge);
  }
}

TEST(Sample, AcceptanceHook) {
  Rng rng(10);
  SamplerOptions opts;
  opts.log_acceptance = [](const stiefel::SkewLift& w) { return w.norm() > 0.2 ? -1e9 : 0.0; };
  for (const StiefelPoint& x : sample(GaussianParams(StiefelPoint::origin(4, 1), 0.3), 100, rng, opts)) {
    ASSERT_LE(distance_to_mean(StiefelPoint::origin(4, 1), x), 0.2);
  }
}

TEST(Normalizer, FlatKernelLimit) {
  // With a flat kernel the estimate is the Haar mass of the ball; on St(1,2)
  // that is the fraction of angles with sqrt(2) tan(|a|/2) < radius.
  Rng rng(11);
  const NormalizerEstimate e = estimate_normalizer(1e6, 2, 1, 200000, rng);
  const double half_angle = 2.0 * std::atan(stiefel::kRegularBallRadius / std::sqrt(2.0));
  EXPECT_NEAR(e.value, half_angle / std::numbers::pi, 4.0 * e.std_error + 1e-9);
}

TEST(Normalizer, StdErrorScaling) {
  Rng a(12);
  Rng b(13);
  const NormalizerEstimate e1 = estimate_normalizer(0.3, 4, 2, 20000, a);
  const NormalizerEstimate e2 = estimate_normalizer(0.3, 4, 2, 40000, b);
  EXPECT_NEAR(e1.std_error / e2.std_error, std::sqrt(2.0), 0.15);
}

TEST(Normalizer, TooFewDraws) {
  Rng rng(14);
  EXPECT_THROW(estimate_normalizer(0.3, 4, 2, 10, rng), Error);
}

TEST(Gof, ExactHalfNormalCalibration) {
  int passes = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(1000 + seed);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<double> d(10000);
    for (double& v : d) v = std::abs(g(rng));
    if (gof_halfnormal(d, 0.3).p_value > 0.05) ++passes;
  }
  EXPECT_GE(passes, 45);
}

TEST(Gof, FittedSigmaSpendsDof) {
  Rng rng(15);
  std::normal_distribution<double> g(0.0, 0.7);
  std::vector<double> d(5000);
  for (double& v : d) v = std::abs(g(rng));
  const GofReport fixed = gof_halfnormal(d, 0.7, 10);
  const GofReport fitted = gof_halfnormal(d, std::nullopt, 10);
  EXPECT_EQ(fixed.dof, 9);
  EXPECT_EQ(fitted.dof, 8);
  EXPECT_NEAR(fitted.sigma, 0.7, 0.03);
}

TEST(Gof, IdenticalDistancesReject) {
  const std::vector<double> d(1000, 0.2);
  EXPECT_LT(gof_halfnormal(d, 0.3).p_value, 1e-10);
}

TEST(Gof, MixtureRejects) {
  Rng rng(16);
  std::normal_distribution<double> a(0.0, 0.05);
  std::normal_distribution<double> b(0.0, 1.0);
  std::vector<double> d;
  for (int i = 0; i < 5000; ++i) {
    d.push_back(std::abs(a(rng)));
    d.push_back(std::abs(b(rng)));
  }
  EXPECT_LT(gof_halfnormal(d, std::nullopt).p_value, 1e-6);
}

TEST(Gof, TooFewDistances) {
  const std::vector<double> d = {0.1, 0.2};
  EXPECT_THROW(gof_halfnormal(d, 0.3), Error);
}

TEST(Gof, BinsReducedForSmallSamples) {
  const std::vector<double> d(30, 0.1);
  EXPECT_EQ(gof_halfnormal(d, 0.3, 20).bins.size(), 6u);
}
