#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "learnrisk/error.hpp"
#include "learnrisk/reference_scorer.hpp"
#include "oracles.hpp"

namespace learnrisk {
namespace {

MetricMatrix TwoColumns(std::size_t rows) {
  const Schema s({{"a", ValueKind::kText}, {"b", ValueKind::kText}});
  return MetricMatrix({MakeDescriptor(s, "a", "token-jaccard"), MakeDescriptor(s, "b", "token-jaccard")},
                      rows);
}

// Matches have column 0 above 0.5; column 1 is noise.
struct Separable {
  MetricMatrix matrix;
  std::vector<std::uint8_t> is_match;
};

Separable MakeSeparable(std::size_t n, std::uint64_t seed) {
  Separable s{TwoColumns(n), std::vector<std::uint8_t>(n)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    s.is_match[r] = r % 3 == 0;
    s.matrix.set(r, 0, s.is_match[r] ? 0.6 + 0.4 * unit(rng) : 0.4 * unit(rng));
    s.matrix.set(r, 1, unit(rng));
  }
  return s;
}

TEST(Reference, SeparableDataIsFitExactly) {
  const auto data = MakeSeparable(300, 1);
  ReferenceConfig config;
  const auto scorer = FitReference(data.matrix, data.is_match, config);
  const auto probs = ScoreReference(scorer, data.matrix);
  for (std::size_t r = 0; r < probs.size(); ++r) {
    EXPECT_EQ(probs[r] >= 0.5, data.is_match[r] == 1) << r;
  }
  const auto held_out = MakeSeparable(50, 2);
  const auto held_probs = ScoreReference(scorer, held_out.matrix);
  for (std::size_t r = 0; r < held_probs.size(); ++r) {
    if (held_out.is_match[r]) EXPECT_GT(held_probs[r], 0.5);
  }
  EXPECT_EQ(FitReference(data.matrix, data.is_match, config).coefficient, scorer.coefficient);
}

TEST(Reference, ZeroEpochsGiveThePrior) {
  const auto data = MakeSeparable(90, 3);
  ReferenceConfig config;
  config.epochs = 0;
  const auto probs = ScoreReference(FitReference(data.matrix, data.is_match, config), data.matrix);
  for (double p : probs) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
}

TEST(Reference, ZeroModelAndSignFlip) {
  const auto data = MakeSeparable(40, 4);
  LinearScorer scorer{{"token-jaccard(a)", "token-jaccard(b)"}, {0.5, 0.5}, {0.2, 0.3}, {0.0, 0.0}, 0.0};
  for (double p : ScoreReference(scorer, data.matrix)) EXPECT_EQ(p, 0.5);
  scorer.coefficient = {1.3, -0.4};
  scorer.intercept = 0.2;
  const auto p = ScoreReference(scorer, data.matrix);
  scorer.coefficient = {-1.3, 0.4};
  scorer.intercept = -0.2;
  const auto q = ScoreReference(scorer, data.matrix);
  for (std::size_t r = 0; r < p.size(); ++r) EXPECT_NEAR(p[r], 1.0 - q[r], 1e-15);
}

TEST(Reference, LossGradientMatchesFiniteDifferences) {
  const auto data = MakeSeparable(60, 5);
  LinearScorer scorer{{"token-jaccard(a)", "token-jaccard(b)"}, {0.4, 0.5}, {0.3, 0.3}, {0.7, -0.2}, 0.1};
  const auto rows = DesignRows(scorer, data.matrix);
  std::vector<double> grad;
  LogisticLoss(scorer, rows, data.is_match, 0.01, &grad);
  auto f = [&](const std::vector<double>& x) {
    LinearScorer s = scorer;
    s.intercept = x[0];
    s.coefficient = {x[1], x[2]};
    return LogisticLoss(s, rows, data.is_match, 0.01);
  };
  const std::vector<double> x{scorer.intercept, 0.7, -0.2};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(grad[k], oracle::CentralDifference(f, x, k, 1e-6), 1e-8);
  }
}

TEST(Reference, SingleClassIsDegenerate) {
  auto data = MakeSeparable(20, 6);
  std::fill(data.is_match.begin(), data.is_match.end(), 0);
  try {
    FitReference(data.matrix, data.is_match, ReferenceConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(Reference, UnknownColumnIsConfigError) {
  const auto data = MakeSeparable(20, 6);
  ReferenceConfig config;
  config.columns = {"edit-similarity(a)"};
  EXPECT_THROW(FitReference(data.matrix, data.is_match, config), Error);
}

TEST(Bootstrap, MembersAreDeterministicAndVary) {
  const auto data = MakeSeparable(120, 7);
  ReferenceConfig config;
  config.epochs = 50;
  config.seed = 11;
  const auto a = BootstrapEnsemble(data.matrix, data.is_match, data.matrix, 5, config);
  const auto b = BootstrapEnsemble(data.matrix, data.is_match, data.matrix, 5, config);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 120u);
  ASSERT_EQ(a[0].size(), 5u);
  EXPECT_NE(a[0][0], a[0][1]);
}

}  // namespace
}  // namespace learnrisk
