#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "learnrisk/error.hpp"
#include "learnrisk/evaluation.hpp"
#include "learnrisk/training.hpp"
#include "instances.hpp"
#include "oracles.hpp"

namespace learnrisk {
namespace {

TEST(Posterior, Examples) {
  EXPECT_EQ(PosteriorProb(0.3, 0.3), 0.5);
  EXPECT_NEAR(PosteriorProb(std::log(3.0), 0.0), 0.75, 1e-15);
  EXPECT_NEAR(PosteriorProb(50.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(PosteriorProb(0.0, 800.0), 0.0, 1e-300);
  EXPECT_TRUE(std::isfinite(PosteriorProb(-800.0, 800.0)));
}

TEST(Target, Examples) {
  EXPECT_EQ(TargetProb(1, 0), 1.0);
  EXPECT_EQ(TargetProb(0, 1), 0.0);
  EXPECT_EQ(TargetProb(1, 1), 0.5);
  EXPECT_EQ(TargetProb(0, 0), 0.5);
}

using instances::RandomRiskInstance;
using Instance = instances::RiskInstance;

TEST(Loss, Examples) {
  Instance in;
  in.model = RiskModelParams::Initial({}, 1, 0.9);
  in.set.features = {FeatureVector{{}, 0.3}, FeatureVector{{}, 0.3}};
  in.set.labels = {MachineLabel::kUnmatching, MachineLabel::kUnmatching};
  in.set.mislabeled = {1, 0};
  const std::vector<Comparison> one{{0, 1, 1.0}};
  EXPECT_NEAR(Loss(in.model, in.set, one, 0.0, 0.0), std::log(2.0), 1e-15);
  // Regularization adds l1 v + l2 v^2 for every materialized parameter.
  const double reg = Loss(in.model, in.set, one, 0.1, 0.01) - std::log(2.0);
  double want = 0.0;
  for (double v : {0.3, 0.2, 10.0}) want += 0.1 * v + 0.01 * v * v;
  EXPECT_NEAR(reg, want, 1e-12);
}

TEST(Loss, SingleComparisonOnPointMasses) {
  Instance in;
  in.model = RiskModelParams::Initial({}, 1, 0.9);
  in.model.bin_rsd[0] = 1e-9;
  // With a near-zero spread an unmatching pair's risk is its probability.
  in.set.features = {FeatureVector{{}, 0.98}, FeatureVector{{}, 0.02}};
  in.set.labels = {MachineLabel::kUnmatching, MachineLabel::kUnmatching};
  in.set.mislabeled = {1, 0};
  const std::vector<Comparison> c{{0, 1, 1.0}};
  const double loss = Loss(in.model, in.set, c, 0.0, 0.0);
  EXPECT_NEAR(loss, std::log1p(std::exp(-(0.98 - 0.02))), 1e-9);
}

TEST(Loss, SwappingComparisonsIsSymmetric) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = RandomRiskInstance(rng, 8, 12, 25);
    for (auto& c : in.comparisons) c.target = std::uniform_real_distribution<double>(0, 1)(rng);
    auto swapped = in.comparisons;
    for (auto& c : swapped) c = {c.j, c.i, 1.0 - c.target};
    EXPECT_NEAR(Loss(in.model, in.set, in.comparisons, 1e-3, 1e-3),
                Loss(in.model, in.set, swapped, 1e-3, 1e-3), 1e-12);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = RandomRiskInstance(rng, 1 + rng() % 20, 4 + rng() % 12, 1 + rng() % 30);
    const double l1 = trial % 2 ? 1e-3 : 0.0;
    const double l2 = trial % 3 ? 1e-3 : 0.0;
    std::vector<double> analytic;
    const double loss = Loss(in.model, in.set, in.comparisons, l1, l2, &analytic);
    const auto free = PackFree(in.model);
    ASSERT_EQ(analytic.size(), free.size());
    auto f = [&](const std::vector<double>& x) {
      RiskModelParams m = in.model;
      UnpackFree(x, m);
      return Loss(m, in.set, in.comparisons, l1, l2);
    };
    for (std::size_t k = 0; k < free.size(); ++k) {
      const double fd = oracle::CentralDifference(f, free, k, 1e-5);
      EXPECT_TRUE(oracle::ComparePartial(analytic[k], fd, loss, 1e-5).ok(1e-4))
          << "trial " << trial << " param " << k << " fd " << fd << " analytic " << analytic[k];
    }
  }
}

TEST(PackFree, RoundTrip) {
  std::mt19937_64 rng(4);
  const auto in = RandomRiskInstance(rng, 5, 6, 3);
  const auto free = PackFree(in.model);
  EXPECT_EQ(free.size(), 2 * 5 + in.model.bin_count() + 2);
  EXPECT_DOUBLE_EQ(free[0], std::log(in.model.rule_weight[0]));
  EXPECT_DOUBLE_EQ(free.back(), std::log(in.model.beta));
  RiskModelParams out = in.model;
  UnpackFree(free, out);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(out.rule_weight[k], in.model.rule_weight[k], 1e-15);
  EXPECT_THROW(UnpackFree(std::vector<double>(3), out), Error);
}

TEST(GradientStep, ZeroLearningRateIsIdentity) {
  std::mt19937_64 rng(8);
  const auto in = RandomRiskInstance(rng, 6, 10, 20);
  TrainConfig config;
  config.learning_rate = 0.0;
  EXPECT_EQ(GradientStep(in.model, in.set, in.comparisons, config), in.model);
  // No comparisons and no regularization: zero gradient.
  config.learning_rate = 0.1;
  config.l1 = config.l2 = 0.0;
  EXPECT_EQ(GradientStep(in.model, in.set, {}, config), in.model);
}

TEST(GradientStep, MovesAgainstTheGradient) {
  std::mt19937_64 rng(12);
  const auto in = RandomRiskInstance(rng, 6, 10, 20);
  TrainConfig config;
  std::vector<double> g;
  Loss(in.model, in.set, in.comparisons, config.l1, config.l2, &g);
  const auto next = GradientStep(in.model, in.set, in.comparisons, config);
  const auto before = PackFree(in.model), after = PackFree(next);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(after[k] - before[k], -config.learning_rate * g[k], 1e-12);
  }
}

// One rule marks exactly the mislabeled pairs.
RiskTrainSet PlantedSignal(std::size_t n) {
  RiskTrainSet set;
  std::mt19937_64 rng(77);
  for (std::size_t i = 0; i < n; ++i) {
    const bool bad = i % 5 == 0;
    FeatureVector f;
    f.classifier_prob = 0.6 + 0.35 * std::uniform_real_distribution<double>(0, 1)(rng);
    if (bad) f.fired.push_back(0);
    if (rng() % 2) f.fired.push_back(1);
    set.features.push_back(f);
    set.labels.push_back(MachineLabel::kMatching);
    set.mislabeled.push_back(bad);
  }
  return set;
}

std::vector<RiskRule> PlantedRules() {
  return {{{{0, Comparator::kEqual, 0.0}}, Truth::kInequivalent, 1.0, 30, 0, 1.0 / 32, 0},
          {{{1, Comparator::kEqual, 1.0}}, Truth::kEquivalent, 0.9, 60, 54, 55.0 / 62, 1}};
}

TEST(Train, PlantedRuleSeparatesMislabeledPairs) {
  const auto set = PlantedSignal(100);
  TrainConfig config;
  config.epochs = 200;
  config.learning_rate = 0.01;
  const auto result = Train(RiskModelParams::Initial(PlantedRules(), 10, 0.9), set, config);
  ASSERT_EQ(result.loss_trace.size(), 200u);
  EXPECT_LT(result.loss_trace.back(), result.loss_trace.front());
  std::vector<double> scores;
  for (std::size_t i = 0; i < set.size(); ++i) {
    scores.push_back(PairRisk(result.model, set.features[i], set.labels[i]));
  }
  EXPECT_EQ(RocAuroc(scores, set.mislabeled).auroc, 1.0);
}

TEST(Train, FullBatchTraceIsNonIncreasing) {
  const auto set = PlantedSignal(60);
  TrainConfig config;
  config.epochs = 50;
  const auto result = Train(RiskModelParams::Initial(PlantedRules(), 10, 0.9), set, config);
  for (std::size_t e = 1; e < result.loss_trace.size(); ++e) {
    EXPECT_LE(result.loss_trace[e], result.loss_trace[e - 1] + 1e-12) << "epoch " << e;
  }
  EXPECT_NO_THROW(result.model.Validate());
}

TEST(Train, ZeroEpochsAndDeterminism) {
  const auto set = PlantedSignal(40);
  const auto initial = RiskModelParams::Initial(PlantedRules(), 10, 0.9);
  TrainConfig config;
  config.epochs = 0;
  EXPECT_EQ(Train(initial, set, config).model, initial);
  config.epochs = 20;
  config.batch = 50;  // forces sampled comparisons
  config.seed = 5;
  const auto a = Train(initial, set, config);
  const auto b = Train(initial, set, config);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.model, b.model);
}

TEST(Train, DegenerateSetIsRejected) {
  auto set = PlantedSignal(20);
  std::fill(set.mislabeled.begin(), set.mislabeled.end(), 0);
  try {
    Train(RiskModelParams::Initial(PlantedRules(), 10, 0.9), set, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(CrossComparisons, MislabeledTimesCorrect) {
  const auto set = PlantedSignal(10);
  const auto c = CrossComparisons(set);
  EXPECT_EQ(c.size(), 2u * 8u);
  for (const auto& x : c) {
    EXPECT_TRUE(set.mislabeled[x.i]);
    EXPECT_FALSE(set.mislabeled[x.j]);
    EXPECT_EQ(x.target, 1.0);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.learning_rate = 0.0;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.l1 = -1;
  EXPECT_THROW(c.Validate(), Error);
}

}  // namespace
}  // namespace learnrisk
