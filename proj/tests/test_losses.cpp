#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dtg/gradcheck.hpp"
#include "dtg/losses.hpp"
#include "dtg/rng.hpp"

using dtg::FocalLoss;
using dtg::RankDistribution;
using dtg::RankMatchingLoss;
using dtg::RegressionDelta;
using dtg::SmoothL1Loss;

// -------------------------------- focal ---------------------------------------

TEST(Focal, ConfidentCorrectPredictionCostsNothing) {
  const std::vector<double> probs = {1.0 - 1e-7};
  const FocalLoss fl = dtg::focal_loss(probs, 0, 2.0, 0.25);
  EXPECT_NEAR(fl.value, 0.0, 1e-12);
}

TEST(Focal, GammaZeroReducesToCrossEntropy) {
  const std::vector<double> probs = {0.5};
  const FocalLoss fl = dtg::focal_loss(probs, 0, 0.0, 1.0);
  EXPECT_NEAR(fl.value, std::log(2.0), 1e-12);
}

TEST(Focal, StandardParametersMatchDirectEvaluation) {
  const std::vector<double> probs = {0.5};
  const FocalLoss fl = dtg::focal_loss(probs, 0, 2.0, 0.25);
  EXPECT_NEAR(fl.value, 0.25 * 0.25 * std::log(2.0), 1e-12);
}

TEST(Focal, PositiveTargetTouchesOnlyThatEntry) {
  const std::vector<double> probs = {0.3, 0.5, 0.7};
  const FocalLoss fl = dtg::focal_loss(probs, 1, 2.0, 0.25);
  EXPECT_DOUBLE_EQ(fl.grad[0], 0.0);
  EXPECT_NE(fl.grad[1], 0.0);
  EXPECT_DOUBLE_EQ(fl.grad[2], 0.0);
}

TEST(Focal, BackgroundSumsOverForegroundEntries) {
  const std::vector<double> probs = {0.2, 0.4};
  const FocalLoss fl = dtg::focal_loss(probs, dtg::kBackgroundClass, 2.0, 0.25);
  const double expected = -(1.0 - 0.25) * (0.2 * 0.2 * std::log(0.8))
                          - (1.0 - 0.25) * (0.4 * 0.4 * std::log(0.6));
  EXPECT_NEAR(fl.value, expected, 1e-12);
  EXPECT_NE(fl.grad[0], 0.0);
  EXPECT_NE(fl.grad[1], 0.0);
}

TEST(Focal, SaturatedInputsStayFinite) {
  const std::vector<double> probs = {0.0, 1.0};
  const FocalLoss bg = dtg::focal_loss(probs, dtg::kBackgroundClass, 2.0, 0.25);
  const FocalLoss pos = dtg::focal_loss(probs, 0, 2.0, 0.25);
  EXPECT_TRUE(std::isfinite(bg.value));
  EXPECT_TRUE(std::isfinite(pos.value));
  EXPECT_TRUE(std::isfinite(bg.grad[1]));
  EXPECT_TRUE(std::isfinite(pos.grad[0]));
}

TEST(Focal, OutOfRangeTargetIsAnError) {
  const std::vector<double> probs = {0.5};
  EXPECT_THROW(dtg::focal_loss(probs, 1, 2.0, 0.25), dtg::InvariantError);
  EXPECT_THROW(dtg::focal_loss(probs, -2, 2.0, 0.25), dtg::InvariantError);
}

// ------------------------------ smooth_l1 -------------------------------------

TEST(SmoothL1, ExactPredictionCostsNothing) {
  const RegressionDelta d{0.1, -0.2, 0.3, -0.4};
  const SmoothL1Loss sl = dtg::smooth_l1(d, d, 1.0);
  EXPECT_DOUBLE_EQ(sl.value, 0.0);
}

TEST(SmoothL1, LinearBranchMatchesPiecewiseFormula) {
  const SmoothL1Loss sl = dtg::smooth_l1(RegressionDelta{2.0, 0, 0, 0}, RegressionDelta{}, 1.0);
  EXPECT_DOUBLE_EQ(sl.value, 1.5);
  EXPECT_DOUBLE_EQ(sl.grad.dx, 1.0);
}

TEST(SmoothL1, QuadraticBranchMatchesPiecewiseFormula) {
  const SmoothL1Loss sl = dtg::smooth_l1(RegressionDelta{0.5, 0, 0, 0}, RegressionDelta{}, 1.0);
  EXPECT_DOUBLE_EQ(sl.value, 0.125);
  EXPECT_DOUBLE_EQ(sl.grad.dx, 0.5);
}

TEST(SmoothL1, CoordinatesSumIndependently) {
  const SmoothL1Loss sl =
      dtg::smooth_l1(RegressionDelta{2.0, 0.5, 0, 0}, RegressionDelta{}, 1.0);
  EXPECT_DOUBLE_EQ(sl.value, 1.5 + 0.125);
}

// --------------------------- rank_distribution --------------------------------

TEST(RankDistribution, EqualScoresGiveUniform) {
  const std::vector<double> scores = {0.4, 0.4, 0.4, 0.4};
  const RankDistribution d = dtg::rank_distribution(scores, 1.0);
  for (double p : d.probs) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(RankDistribution, TwoElementSoftmaxIsSigmoid) {
  const std::vector<double> scores = {0.9, 0.45};
  const RankDistribution d = dtg::rank_distribution(scores, 1.0);
  const double sigma = 1.0 / (1.0 + std::exp(-0.45));
  EXPECT_NEAR(d.probs[0], sigma, 1e-15);
  EXPECT_NEAR(d.probs[1], 1.0 - sigma, 1e-15);
}

TEST(RankDistribution, ShiftInvariant) {
  const std::vector<double> scores = {0.1, 0.8, 0.3};
  const std::vector<double> shifted = {0.1 + 7.0, 0.8 + 7.0, 0.3 + 7.0};
  const RankDistribution a = dtg::rank_distribution(scores, 1.0);
  const RankDistribution b = dtg::rank_distribution(shifted, 1.0);
  for (std::size_t i = 0; i < a.probs.size(); ++i) EXPECT_NEAR(a.probs[i], b.probs[i], 1e-12);
}

TEST(RankDistribution, SumsToOneEvenForExtremeScores) {
  dtg::Rng rng(51);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = rng.uniform_int(1, 20);
    std::vector<double> scores(n);
    for (double& s : scores) s = rng.uniform(-1e3, 1e3);
    const RankDistribution d = dtg::rank_distribution(scores, rng.coin() ? 1.0 : 0.01);
    double sum = 0.0;
    for (double p : d.probs) {
      EXPECT_GE(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(RankDistribution, HighTemperatureFlattensToUniform) {
  const std::vector<double> scores = {0.9, 0.1, 0.5};
  const RankDistribution d = dtg::rank_distribution(scores, 1e6);
  for (double p : d.probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-5);
}

// --------------------------- rank_matching_loss -------------------------------

TEST(RankMatching, IdenticalScoresCostNothing) {
  const std::vector<double> scores = {0.9, 0.4, 0.2, 0.7};
  const RankMatchingLoss rm = dtg::rank_matching_loss(scores, scores, 1.0);
  EXPECT_LT(std::abs(rm.value), 1e-12);
  for (double g : rm.grad) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(RankMatching, SwappedPairMatchesClosedForm) {
  // KL between softmax(0.9,0.1) and softmax(0.1,0.9) reduces to 0.8*tanh(0.4)
  const std::vector<double> teacher = {0.9, 0.1};
  const std::vector<double> student = {0.1, 0.9};
  const RankMatchingLoss rm = dtg::rank_matching_loss(teacher, student, 1.0);
  EXPECT_NEAR(rm.value, 0.8 * std::tanh(0.4), 1e-12);
}

TEST(RankMatching, SwappedPairMatchesDirectEvaluation) {
  const std::vector<double> teacher = {0.9, 0.1};
  const std::vector<double> student = {0.1, 0.9};
  const RankMatchingLoss rm = dtg::rank_matching_loss(teacher, student, 1.0);
  const long double et0 = expl(0.9L), et1 = expl(0.1L);
  const long double dt0 = et0 / (et0 + et1), dt1 = et1 / (et0 + et1);
  const long double ds0 = et1 / (et0 + et1), ds1 = et0 / (et0 + et1);
  const long double expected = dt0 * logl(dt0 / ds0) + dt1 * logl(dt1 / ds1);
  EXPECT_NEAR(rm.value, static_cast<double>(expected), 1e-12);
}

TEST(RankMatching, SingletonClusterIsExactlyZero) {
  const std::vector<double> one = {0.42};
  const RankMatchingLoss rm = dtg::rank_matching_loss(one, one, 1.0);
  EXPECT_EQ(rm.value, 0.0);
  EXPECT_EQ(rm.grad[0], 0.0);
}

TEST(RankMatching, LengthMismatchIsAnAlignmentBug) {
  const std::vector<double> a = {0.1, 0.2};
  const std::vector<double> b = {0.1};
  EXPECT_THROW(dtg::rank_matching_loss(a, b, 1.0), dtg::InvariantError);
}

TEST(RankMatching, NonnegativeOnRandomClusters) {
  dtg::Rng rng(52);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = rng.uniform_int(1, 12);
    std::vector<double> teacher(n), student(n);
    for (double& s : teacher) s = rng.uniform(0.0, 1.0);
    for (double& s : student) s = rng.uniform(0.0, 1.0);
    const RankMatchingLoss rm = dtg::rank_matching_loss(teacher, student, rng.uniform(0.2, 5.0));
    EXPECT_GE(rm.value, -1e-12);
  }
}

// ------------------------------- combiners ------------------------------------

TEST(Combine, UnlabeledIsWeightedSum) {
  EXPECT_DOUBLE_EQ(dtg::combine_unlabeled(1.0, 2.0, 0.5, 3.0), 4.5);
}

TEST(Combine, BetaZeroDisablesRankMatching) {
  EXPECT_DOUBLE_EQ(dtg::combine_unlabeled(1.0, 2.0, 123.0, 0.0), 3.0);
}

TEST(Combine, TotalIsLabeledPlusWeightedUnlabeled) {
  EXPECT_DOUBLE_EQ(dtg::combine_total(1.0, 0.5, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(dtg::combine_total(1.0, 0.5, 0.0), 1.0);
}

// ---------------------------- gradient checks ---------------------------------

TEST(GradCheck, FocalGradientMatchesFiniteDifferences) {
  dtg::Rng rng(61);
  EXPECT_LT(dtg::grad_check(dtg::LossId::kFocal, rng, 100, 1e-5), 1e-4);
}

TEST(GradCheck, SmoothL1GradientMatchesFiniteDifferences) {
  dtg::Rng rng(62);
  EXPECT_LT(dtg::grad_check(dtg::LossId::kSmoothL1, rng, 100, 1e-5), 1e-4);
}

TEST(GradCheck, RankMatchingGradientMatchesFiniteDifferences) {
  dtg::Rng rng(63);
  EXPECT_LT(dtg::grad_check(dtg::LossId::kRankMatching, rng, 100, 1e-5), 1e-4);
}

TEST(GradCheck, LinearControlIsExact) {
  dtg::Rng rng(64);
  EXPECT_LT(dtg::grad_check(dtg::LossId::kLinearControl, rng, 10, 1e-5), 1e-9);
}

TEST(GradCheck, InjectedErrorIsDetected) {
  dtg::Rng rng(65);
  EXPECT_GT(dtg::grad_check(dtg::LossId::kFocal, rng, 10, 1e-5, 1e-2), 1e-4);
}
