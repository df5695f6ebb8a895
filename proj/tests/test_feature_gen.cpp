#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "learnrisk/error.hpp"
#include "learnrisk/feature_gen.hpp"
#include "learnrisk/synth.hpp"
#include "instances.hpp"
#include "oracles.hpp"

namespace learnrisk {
namespace {

MetricMatrix ToyMatrix(std::size_t rows) { return instances::SplitMatrix(rows); }

TEST(Gini, Examples) {
  EXPECT_DOUBLE_EQ(Gini(0, 10), 0.0);
  EXPECT_DOUBLE_EQ(Gini(5, 5), 0.5);
  EXPECT_DOUBLE_EQ(Gini(3, 1), 0.375);
  // One weighted match balances 1000 unmatches.
  EXPECT_DOUBLE_EQ(Gini(1, 1000, 1000.0), 0.5);
  EXPECT_THROW(Gini(0, 0), Error);
}

TEST(OneSidedGini, Examples) {
  const ClassCounts l{1, 9}, r{5, 5};
  EXPECT_NEAR(OneSidedGini(l, r, 0.2), 0.164, 1e-15);
  EXPECT_DOUBLE_EQ(OneSidedGini(l, r, 0.0), std::min(Gini(1, 9), Gini(5, 5)));
  EXPECT_DOUBLE_EQ(OneSidedGini(ClassCounts{1, 2}, r, 1.0), 1.0 / 10.0);
  EXPECT_THROW(OneSidedGini(ClassCounts{}, r, 0.2), Error);
}

TEST(ClassCounts, PurityAndMajority) {
  const ClassCounts c{2, 8};
  EXPECT_DOUBLE_EQ(c.impurity(), 0.2);
  EXPECT_DOUBLE_EQ(c.purity(), 0.8);
  EXPECT_EQ(c.majority(), Truth::kInequivalent);
  EXPECT_EQ((ClassCounts{3, 3}).majority(), Truth::kInequivalent);
}

TEST(Predicate, FlaggedCellsNeverHold) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto cmp : {Comparator::kLessEqual, Comparator::kGreater, Comparator::kEqual,
                   Comparator::kNotEqual}) {
    EXPECT_FALSE((Predicate{0, cmp, 0.5}.Holds(nan)));
  }
  EXPECT_TRUE((Predicate{0, Comparator::kLessEqual, 0.5}.Holds(0.5)));
  EXPECT_TRUE((Predicate{0, Comparator::kNotEqual, 1.0}.Holds(0.0)));
}

TEST(BestSplit, PerfectBooleanColumn) {
  auto m = ToyMatrix(30);
  std::vector<std::uint8_t> is_match(30);
  std::vector<std::size_t> rows(30);
  for (std::size_t r = 0; r < 30; ++r) {
    rows[r] = r;
    is_match[r] = r < 12;
    m.set(r, 1, r < 12 ? 1.0 : 0.0);
  }
  const auto result = BestSplit(m, is_match, rows, 1, {0.2, 1.0, 1});
  EXPECT_TRUE(result.operation.equality);
  // Both sides are pure; the larger (value 0) side scores lower.
  EXPECT_NEAR(result.operation.score, 0.2 / 18.0, 1e-15);
  EXPECT_EQ(result.left_rows.size() + result.right_rows.size(), 30u);
  const auto weighted = BestSplit(m, is_match, rows, 1, {0.2, 1000.0, 1});
  EXPECT_NEAR(weighted.operation.score, 0.2 / 18.0, 1e-15);
}

TEST(BestSplit, ConstantColumnHasNoCandidate) {
  auto m = ToyMatrix(10);
  std::vector<std::uint8_t> is_match(10, 0);
  is_match[3] = 1;
  std::vector<std::size_t> rows(10);
  for (std::size_t r = 0; r < 10; ++r) {
    rows[r] = r;
    m.set(r, 0, 4.0);
  }
  EXPECT_FALSE(FindBestSplit(m, is_match, rows, 0, {}).has_value());
  EXPECT_THROW(BestSplit(m, is_match, rows, 0, {}), Error);
}

TEST(BestSplit, EqualScoresPickSmallerThreshold) {
  // Values 1..4 with labels u u m m ... symmetric: thresholds 1.5 and 3.5 tie.
  auto m = ToyMatrix(4);
  std::vector<std::uint8_t> is_match{1, 0, 0, 1};
  std::vector<std::size_t> rows{0, 1, 2, 3};
  for (std::size_t r = 0; r < 4; ++r) m.set(r, 0, static_cast<double>(r + 1));
  const auto result = BestSplit(m, is_match, rows, 0, {0.0, 1.0, 1});
  EXPECT_EQ(result.operation.threshold, 1.5);
}

TEST(BestSplit, FlaggedRowsJoinNeitherSide) {
  auto m = ToyMatrix(6);
  std::vector<std::uint8_t> is_match{1, 1, 0, 0, 1, 0};
  std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
  for (std::size_t r = 0; r < 6; ++r) m.set(r, 0, static_cast<double>(r));
  m.set(4, 0, std::nullopt);
  const auto result = BestSplit(m, is_match, rows, 0, {0.2, 1.0, 1});
  EXPECT_EQ(result.left_rows.size() + result.right_rows.size(), 5u);
  EXPECT_EQ(result.operation.left.total() + result.operation.right.total(), 5u);
}

TEST(BestSplit, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(2024);
  const double lambdas[] = {0.0, 1.0, 0.2, 0.5, 0.9};
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = instances::RandomSplitSet(rng, 200);
    const double lambda = lambdas[trial % 5];
    const double w = trial % 2 ? 1000.0 : 1.0;
    const std::size_t min_leaf = 1 + rng() % 3;
    for (std::size_t c = 0; c < 3; ++c) {
      const bool equality = c != 0;
      const auto want =
          oracle::ExhaustiveSplit(s.matrix, s.is_match, s.rows, c, equality, lambda, w, min_leaf);
      const auto got = FindBestSplit(s.matrix, s.is_match, s.rows, c, {lambda, w, min_leaf});
      ASSERT_EQ(got.has_value(), std::isfinite(want.score)) << "trial " << trial;
      if (!got) continue;
      EXPECT_NEAR(got->operation.score, want.score, 1e-12) << "trial " << trial << " col " << c;
      EXPECT_EQ(got->operation.equality, equality);
      if (want.unique) {
        EXPECT_EQ(got->operation.left.total(), want.left_total) << "trial " << trial;
        EXPECT_EQ(got->operation.left.match, want.left_match);
      }
      // Reported counts agree with the rows placed on each side.
      EXPECT_EQ(got->left_rows.size(), got->operation.left.total());
      EXPECT_EQ(got->right_rows.size(), got->operation.right.total());
      const Predicate left = got->operation.LeftPredicate();
      for (auto r : got->left_rows) EXPECT_TRUE(left.Holds(s.matrix.at(r, c)));
      for (auto r : got->right_rows) EXPECT_FALSE(left.Holds(s.matrix.at(r, c)));
    }
  }
}

TEST(Expectation, LaplaceSmoothing) {
  EXPECT_NEAR(ExpectationFromCounts(50, 2), 3.0 / 52.0, 1e-15);
  EXPECT_EQ(ExpectationFromCounts(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(ExpectationFromCounts(10, 10), 11.0 / 12.0);
}

// 200 pairs; the 20 with differing years are all inequivalent, the rest mix.
struct PlantedYear {
  MetricMatrix matrix;
  std::vector<std::uint8_t> is_match;
};

PlantedYear MakePlantedYear() {
  PlantedYear p{ToyMatrix(200), std::vector<std::uint8_t>(200)};
  std::mt19937_64 rng(5);
  for (std::size_t r = 0; r < 200; ++r) {
    const bool differ = r % 10 == 0;
    p.is_match[r] = differ ? 0 : (rng() % 2);
    p.matrix.set(r, 1, differ ? 0.0 : 1.0);
    p.matrix.set(r, 0, static_cast<double>(rng() % 50));
    p.matrix.set(r, 2, static_cast<double>(rng() % 3));
  }
  return p;
}

TEST(GenerateRiskFeatures, RecoversPlantedYearRule) {
  const auto p = MakePlantedYear();
  const auto rules = GenerateRiskFeatures(p.is_match, p.matrix, ForestConfig{});
  const auto it = std::find_if(rules.begin(), rules.end(), [](const RiskRule& rule) {
    return rule.predicates == std::vector<Predicate>{{1, Comparator::kEqual, 0.0}};
  });
  ASSERT_NE(it, rules.end());
  EXPECT_EQ(it->consequent, Truth::kInequivalent);
  EXPECT_EQ(it->support, 20u);
  EXPECT_EQ(it->purity, 1.0);
  EXPECT_DOUBLE_EQ(it->expectation_mu, 1.0 / 22.0);
}

TEST(GenerateRiskFeatures, RuleInvariants) {
  const auto p = MakePlantedYear();
  ForestConfig config;
  const auto rules = GenerateRiskFeatures(p.is_match, p.matrix, config);
  ASSERT_FALSE(rules.empty());
  for (const auto& rule : rules) {
    EXPECT_LE(rule.predicates.size(), static_cast<std::size_t>(config.max_depth));
    EXPECT_GE(rule.support, config.min_leaf);
    EXPECT_GE(rule.purity, 1.0 - config.tau);
    // Stored statistics agree with a recount over the training rows.
    std::size_t covered = 0, equivalent = 0;
    for (std::size_t r = 0; r < p.matrix.rows(); ++r) {
      if (!rule.Matches(p.matrix, r)) continue;
      ++covered;
      equivalent += p.is_match[r];
    }
    EXPECT_EQ(covered, rule.support);
    EXPECT_EQ(equivalent, rule.equivalent_count);
    EXPECT_DOUBLE_EQ(rule.expectation_mu, ExpectationFromCounts(covered, equivalent));
    const std::size_t majority =
        rule.consequent == Truth::kEquivalent ? equivalent : covered - equivalent;
    EXPECT_DOUBLE_EQ(rule.purity, static_cast<double>(majority) / covered);
  }
  // No two rules share predicates and consequent.
  for (std::size_t i = 0; i < rules.size(); ++i) {
    for (std::size_t j = i + 1; j < rules.size(); ++j) {
      auto a = rules[i].predicates, b = rules[j].predicates;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      EXPECT_FALSE(a == b && rules[i].consequent == rules[j].consequent);
    }
  }
}

TEST(GenerateRiskFeatures, Deterministic) {
  const auto p = MakePlantedYear();
  const auto a = GenerateRiskFeatures(p.is_match, p.matrix, ForestConfig{});
  const auto b = GenerateRiskFeatures(p.is_match, p.matrix, ForestConfig{});
  EXPECT_EQ(SerializeRules(a, p.matrix.descriptors()), SerializeRules(b, p.matrix.descriptors()));
}

TEST(GenerateRiskFeatures, ConstantMetricsMixedLabelsGiveNoRules) {
  auto m = ToyMatrix(100);
  std::vector<std::uint8_t> is_match(100);
  for (std::size_t r = 0; r < 100; ++r) {
    is_match[r] = r % 2;
    m.set(r, 0, 1.0);
    m.set(r, 1, 1.0);
    m.set(r, 2, 0.0);
  }
  EXPECT_TRUE(GenerateRiskFeatures(is_match, m, ForestConfig{}).empty());
}

TEST(GenerateRiskFeatures, ZeroTauOnNoisyCorpusGivesNoRules) {
  const auto corpus = GenerateCorpus(SynthSpec::Noisy(150, 3));
  const auto matrix = BuildMetricMatrix(corpus.workload, SynthMetrics(corpus.workload.schema()));
  ForestConfig config;
  config.tau = 0.0;
  config.min_leaf = 1;
  EXPECT_TRUE(GenerateRiskFeatures(corpus.workload, matrix, config).empty());
}

TEST(GenerateRiskFeatures, MissingGroundTruthIsDataError) {
  auto corpus = GenerateCorpus(SynthSpec::Default(40, 2));
  corpus.workload.pairs[5].ground_truth.reset();
  const auto matrix = BuildMetricMatrix(corpus.workload, SynthMetrics(corpus.workload.schema()));
  try {
    GenerateRiskFeatures(corpus.workload, matrix, ForestConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(ForestConfig, Validation) {
  ForestConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.lambda = 1.5;
  EXPECT_THROW(c.Validate(), Error);
  c = {};
  c.min_leaf = 0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST(RuleFile, RoundTrip) {
  const auto p = MakePlantedYear();
  const auto rules = GenerateRiskFeatures(p.is_match, p.matrix, ForestConfig{});
  const auto& d = p.matrix.descriptors();
  const std::string text = SerializeRules(rules, d);
  EXPECT_EQ(text.rfind(kRuleFileHeader, 0), 0u);
  const auto parsed = ParseRules(text, d);
  ASSERT_EQ(parsed.size(), rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    EXPECT_EQ(parsed[i].predicates, rules[i].predicates);
    EXPECT_EQ(parsed[i].consequent, rules[i].consequent);
    EXPECT_EQ(parsed[i].support, rules[i].support);
    EXPECT_EQ(parsed[i].expectation_mu, rules[i].expectation_mu);
  }
  EXPECT_EQ(SerializeRules(parsed, d), text);
  RiskRule year{{{1, Comparator::kEqual, 0.0}}, Truth::kInequivalent, 1.0, 20, 0, 1.0 / 22.0, 0};
  EXPECT_EQ(FormatRule(year, d).rfind("IF numeric-equality(x) = 0 THEN inequivalent", 0), 0u)
      << FormatRule(year, d);
}

TEST(RuleFile, MalformedLinesAreDataErrors) {
  const auto d = ToyMatrix(1).descriptors();
  EXPECT_THROW(ParseRules("IF x = 0 THEN inequivalent | 1 20 0.5\n", d), Error);
  const std::string header = std::string(kRuleFileHeader) + "\n";
  EXPECT_THROW(ParseRules(header + "IF bogus(x) = 0 THEN inequivalent | 1 20 0.5\n", d), Error);
  EXPECT_THROW(ParseRules(header + "IF numeric-equality(x) ~ 0 THEN inequivalent | 1 2 0.5\n", d),
               Error);
  EXPECT_TRUE(ParseRules(header, d).empty());
}

TEST(Featurize, FiredRulesAndFlaggedCells) {
  auto m = ToyMatrix(3);
  m.set(0, 1, 0.0);
  m.set(1, 1, 1.0);
  m.set(2, 1, std::nullopt);
  std::vector<RiskRule> rules{
      {{{1, Comparator::kEqual, 0.0}}, Truth::kInequivalent, 1, 1, 0, 0.3, 0},
      {{{1, Comparator::kNotEqual, 0.0}}, Truth::kEquivalent, 1, 1, 1, 0.7, 0}};
  EXPECT_EQ(Featurize(m, 0, rules, 0.4).fired, std::vector<std::uint32_t>{0});
  EXPECT_EQ(Featurize(m, 1, rules, 0.4).fired, std::vector<std::uint32_t>{1});
  const auto none = Featurize(m, 2, rules, 0.4);
  EXPECT_TRUE(none.fired.empty());
  EXPECT_EQ(none.classifier_prob, 0.4);
}

}  // namespace
}  // namespace learnrisk
