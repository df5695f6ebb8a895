#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "learnrisk/data_model.hpp"
#include "learnrisk/metrics.hpp"

namespace learnrisk {

struct ForestConfig {
  double lambda = 0.2;            // size vs. impurity trade-off of the one-sided Gini
  double tau = 0.1;               // leaf impurity threshold
  int max_depth = 4;              // h: maximum predicates per rule
  std::size_t min_leaf = 5;       // minimum support of any extracted subset
  double match_class_weight = 1000.0;
  std::size_t max_trees = 5000;   // branch budget, pruned breadth-first

  void Validate() const;
};

struct ClassCounts {
  std::size_t match = 0;    // equivalent pairs
  std::size_t unmatch = 0;  // inequivalent pairs

  std::size_t total() const { return match + unmatch; }
  // Unweighted fraction of the minority class.
  double impurity() const;
  double purity() const;
  Truth majority() const;  // ties go to inequivalent
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// 1 - t_M^2 - t_U^2 with the match count multiplied by class_weight.
double Gini(std::size_t match_count, std::size_t unmatch_count, double class_weight = 1.0);

// min over sides of lambda/|side| + (1 - lambda) * G(side).
double OneSidedGini(const ClassCounts& left, const ClassCounts& right, double lambda,
                    double class_weight = 1.0);

enum class Comparator : std::uint8_t { kLessEqual, kGreater, kEqual, kNotEqual };
std::string_view ToString(Comparator comparator);

struct Predicate {
  std::size_t metric = 0;  // column of the metric matrix
  Comparator comparator = Comparator::kLessEqual;
  double threshold = 0.0;

  // Flagged (NaN) cells never satisfy a predicate.
  bool Holds(double value) const;
  friend bool operator==(const Predicate&, const Predicate&) = default;
  friend auto operator<=>(const Predicate&, const Predicate&) = default;
};

enum class Side : std::uint8_t { kLeft, kRight };

// Threshold splits put value <= t on the left; equality splits put value == t
// on the left. Metrics with boolean or count ranges use equality splits.
struct SplitOperation {
  std::size_t metric = 0;
  bool equality = false;
  double threshold = 0.0;
  Side chosen_side = Side::kLeft;
  double score = 0.0;
  ClassCounts left;
  ClassCounts right;

  Predicate LeftPredicate() const;
  Predicate RightPredicate() const;
  Predicate SidePredicate(Side side) const {
    return side == Side::kLeft ? LeftPredicate() : RightPredicate();
  }
};

struct SplitCriteria {
  double lambda = 0.2;
  double class_weight = 1.0;
  std::size_t min_leaf = 1;
};

bool UsesEqualitySplits(const MetricDescriptor& descriptor);

struct SplitResult {
  SplitOperation operation;
  std::vector<std::size_t> left_rows;
  std::vector<std::size_t> right_rows;
};

// Best split of `rows` on one metric column. Rows with a flagged cell join
// neither side. Ties go to the smaller threshold. Returns nullopt when no
// candidate leaves min_leaf rows on both sides.
std::optional<SplitResult> FindBestSplit(const MetricMatrix& matrix,
                                         std::span<const std::uint8_t> is_match,
                                         std::span<const std::size_t> rows, std::size_t metric,
                                         const SplitCriteria& criteria);
// As FindBestSplit, but throws when there is no candidate.
SplitResult BestSplit(const MetricMatrix& matrix, std::span<const std::uint8_t> is_match,
                      std::span<const std::size_t> rows, std::size_t metric,
                      const SplitCriteria& criteria);

struct RiskRule {
  std::vector<Predicate> predicates;  // conjunction
  Truth consequent = Truth::kInequivalent;
  double purity = 0.0;
  std::size_t support = 0;
  std::size_t equivalent_count = 0;
  double expectation_mu = 0.5;
  std::size_t source_tree = 0;

  bool Matches(const MetricMatrix& matrix, std::size_t row) const;
};

// Laplace-smoothed (m + 1) / (n + 2).
double ExpectationFromCounts(std::size_t covered, std::size_t equivalent);
// Recounts the rule's coverage over a labeled training workload.
double EstimateFeatureExpectation(const RiskRule& rule, const MetricMatrix& matrix,
                                  const Workload& training);

// Grows the one-sided decision forest over labeled training pairs and
// returns the de-duplicated rules in discovery order.
std::vector<RiskRule> GenerateRiskFeatures(const Workload& training, const MetricMatrix& matrix,
                                           const ForestConfig& config);
std::vector<RiskRule> GenerateRiskFeatures(std::span<const std::uint8_t> is_match,
                                           const MetricMatrix& matrix, const ForestConfig& config);

// One line per rule:
//   IF <metric> <cmp> <value> AND ... THEN <class> | <purity> <support> <mu>
std::string FormatRule(const RiskRule& rule, const std::vector<MetricDescriptor>& descriptors);
std::string SerializeRules(const std::vector<RiskRule>& rules,
                           const std::vector<MetricDescriptor>& descriptors);
std::vector<RiskRule> ParseRules(std::string_view text,
                                 const std::vector<MetricDescriptor>& descriptors);
inline constexpr std::string_view kRuleFileHeader = "# learnrisk rules v1";

struct FeatureVector {
  std::vector<std::uint32_t> fired;  // indices of satisfied rules, ascending
  double classifier_prob = 0.0;      // the always-active classifier-output feature
};

FeatureVector Featurize(const MetricMatrix& matrix, std::size_t row,
                        const std::vector<RiskRule>& rules, double classifier_prob);
std::vector<FeatureVector> FeaturizeWorkload(const Workload& workload, const MetricMatrix& matrix,
                                             const std::vector<RiskRule>& rules);

}  // namespace learnrisk
