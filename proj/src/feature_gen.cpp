#include "learnrisk/feature_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>

#include "learnrisk/error.hpp"
#include "learnrisk/text_io.hpp"

namespace learnrisk {

void ForestConfig::Validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) Fail(ErrorKind::kConfig, "lambda must lie in [0,1]");
  if (!(tau >= 0.0 && tau <= 1.0)) Fail(ErrorKind::kConfig, "tau must lie in [0,1]");
  if (max_depth < 0) Fail(ErrorKind::kConfig, "max_depth must be non-negative");
  if (min_leaf < 1) Fail(ErrorKind::kConfig, "min_leaf must be at least 1");
  if (!(match_class_weight > 0.0)) Fail(ErrorKind::kConfig, "match_class_weight must be positive");
  if (max_trees < 1) Fail(ErrorKind::kConfig, "max_trees must be at least 1");
}

double ClassCounts::impurity() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(std::min(match, unmatch)) / static_cast<double>(total());
}

double ClassCounts::purity() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(std::max(match, unmatch)) / static_cast<double>(total());
}

Truth ClassCounts::majority() const {
  return match > unmatch ? Truth::kEquivalent : Truth::kInequivalent;
}

double Gini(std::size_t match_count, std::size_t unmatch_count, double class_weight) {
  if (match_count + unmatch_count == 0) {
    Fail(ErrorKind::kInvalidArgument, "Gini of an empty set is undefined");
  }
  const double weighted_match = class_weight * static_cast<double>(match_count);
  const double total = weighted_match + static_cast<double>(unmatch_count);
  const double t_match = weighted_match / total;
  const double t_unmatch = static_cast<double>(unmatch_count) / total;
  return 1.0 - t_match * t_match - t_unmatch * t_unmatch;
}

namespace {

double SideTerm(const ClassCounts& side, double lambda, double class_weight) {
  return lambda / static_cast<double>(side.total()) +
         (1.0 - lambda) * Gini(side.match, side.unmatch, class_weight);
}

}  // namespace

double OneSidedGini(const ClassCounts& left, const ClassCounts& right, double lambda,
                    double class_weight) {
  if (left.total() == 0 || right.total() == 0) {
    Fail(ErrorKind::kInvalidArgument, "one-sided Gini needs two non-empty sides");
  }
  return std::min(SideTerm(left, lambda, class_weight), SideTerm(right, lambda, class_weight));
}

std::string_view ToString(Comparator comparator) {
  switch (comparator) {
    case Comparator::kLessEqual: return "<=";
    case Comparator::kGreater: return ">";
    case Comparator::kEqual: return "=";
    case Comparator::kNotEqual: return "!=";
  }
  return "?";
}

bool Predicate::Holds(double value) const {
  if (std::isnan(value)) return false;
  switch (comparator) {
    case Comparator::kLessEqual: return value <= threshold;
    case Comparator::kGreater: return value > threshold;
    case Comparator::kEqual: return value == threshold;
    case Comparator::kNotEqual: return value != threshold;
  }
  return false;
}

Predicate SplitOperation::LeftPredicate() const {
  return {metric, equality ? Comparator::kEqual : Comparator::kLessEqual, threshold};
}

Predicate SplitOperation::RightPredicate() const {
  return {metric, equality ? Comparator::kNotEqual : Comparator::kGreater, threshold};
}

bool UsesEqualitySplits(const MetricDescriptor& descriptor) {
  const MetricRange range = descriptor.range();
  return range == MetricRange::kBoolean || range == MetricRange::kCount;
}

namespace {

double Midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid >= lo && mid < hi) ? mid : lo;
}

// Tracks the lowest-scoring candidate; candidates arrive in ascending
// threshold order so strict improvement keeps the smaller threshold on ties.
struct BestTracker {
  double lambda;
  double class_weight;
  std::size_t min_leaf;
  std::optional<SplitOperation> best;

  void Offer(std::size_t metric, bool equality, double threshold, const ClassCounts& left,
             const ClassCounts& right) {
    if (left.total() < min_leaf || right.total() < min_leaf) return;
    const double left_term = SideTerm(left, lambda, class_weight);
    const double right_term = SideTerm(right, lambda, class_weight);
    const double score = std::min(left_term, right_term);
    if (best && !(score < best->score)) return;
    SplitOperation op;
    op.metric = metric;
    op.equality = equality;
    op.threshold = threshold;
    op.chosen_side = left_term <= right_term ? Side::kLeft : Side::kRight;
    op.score = score;
    op.left = left;
    op.right = right;
    best = op;
  }
};

// One unflagged row of a column, packed so sweeps read memory in order.
struct Entry {
  double value;
  std::uint32_t row;
  std::uint32_t match;
};

// Sweeps candidates of one column over entries sorted by value.
template <typename Offer>
void SweepCandidates(std::span<const Entry> sorted, bool equality, Offer&& offer) {
  ClassCounts total;
  for (const Entry& e : sorted) (e.match ? total.match : total.unmatch)++;
  const std::size_t n = sorted.size();
  if (equality) {
    std::size_t i = 0;
    while (i < n) {
      const double value = sorted[i].value;
      ClassCounts group;
      while (i < n && sorted[i].value == value) {
        (sorted[i].match ? group.match : group.unmatch)++;
        ++i;
      }
      const ClassCounts rest{total.match - group.match, total.unmatch - group.unmatch};
      offer(value, group, rest);
    }
    return;
  }
  ClassCounts prefix;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    (sorted[i].match ? prefix.match : prefix.unmatch)++;
    const double lo = sorted[i].value;
    const double hi = sorted[i + 1].value;
    if (lo == hi) continue;
    const ClassCounts rest{total.match - prefix.match, total.unmatch - prefix.unmatch};
    offer(Midpoint(lo, hi), prefix, rest);
  }
}

bool EntryLess(const Entry& a, const Entry& b) {
  return a.value < b.value || (a.value == b.value && a.row < b.row);
}

template <typename Rows>
std::vector<Entry> SortedUnflagged(std::span<const double> column,
                                   std::span<const std::uint8_t> is_match, const Rows& rows) {
  std::vector<Entry> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    if (!std::isnan(column[r])) {
      out.push_back(Entry{column[r], static_cast<std::uint32_t>(r), is_match[r] ? 1u : 0u});
    }
  }
  std::sort(out.begin(), out.end(), EntryLess);
  return out;
}

}  // namespace

std::optional<SplitResult> FindBestSplit(const MetricMatrix& matrix,
                                         std::span<const std::uint8_t> is_match,
                                         std::span<const std::size_t> rows, std::size_t metric,
                                         const SplitCriteria& criteria) {
  if (metric >= matrix.cols()) Fail(ErrorKind::kInvalidArgument, "metric column out of range");
  if (is_match.size() != matrix.rows()) {
    Fail(ErrorKind::kInvalidArgument, "label count does not match matrix rows");
  }
  const auto column = matrix.column(metric);
  const bool equality = UsesEqualitySplits(matrix.descriptors()[metric]);
  const auto sorted = SortedUnflagged(column, is_match, rows);
  BestTracker tracker{criteria.lambda, criteria.class_weight, std::max<std::size_t>(1, criteria.min_leaf),
                      std::nullopt};
  SweepCandidates(sorted, equality,
                  [&](double threshold, const ClassCounts& left, const ClassCounts& right) {
                    tracker.Offer(metric, equality, threshold, left, right);
                  });
  if (!tracker.best) return std::nullopt;

  SplitResult result;
  result.operation = *tracker.best;
  const Predicate left = result.operation.LeftPredicate();
  std::vector<std::size_t> ordered(rows.begin(), rows.end());
  std::sort(ordered.begin(), ordered.end());
  for (std::size_t r : ordered) {
    if (std::isnan(column[r])) continue;
    (left.Holds(column[r]) ? result.left_rows : result.right_rows).push_back(r);
  }
  return result;
}

SplitResult BestSplit(const MetricMatrix& matrix, std::span<const std::uint8_t> is_match,
                      std::span<const std::size_t> rows, std::size_t metric,
                      const SplitCriteria& criteria) {
  auto result = FindBestSplit(matrix, is_match, rows, metric, criteria);
  if (!result) {
    Fail(ErrorKind::kInvalidArgument,
         "no candidate split on " + matrix.descriptors()[metric].Label());
  }
  return std::move(*result);
}

bool RiskRule::Matches(const MetricMatrix& matrix, std::size_t row) const {
  return std::all_of(predicates.begin(), predicates.end(), [&](const Predicate& p) {
    return p.Holds(matrix.at(row, p.metric));
  });
}

double ExpectationFromCounts(std::size_t covered, std::size_t equivalent) {
  return (static_cast<double>(equivalent) + 1.0) / (static_cast<double>(covered) + 2.0);
}

double EstimateFeatureExpectation(const RiskRule& rule, const MetricMatrix& matrix,
                                  const Workload& training) {
  if (matrix.rows() != training.size()) {
    Fail(ErrorKind::kInvalidArgument, "matrix rows do not match workload size");
  }
  std::size_t covered = 0;
  std::size_t equivalent = 0;
  for (std::size_t r = 0; r < training.size(); ++r) {
    if (!rule.Matches(matrix, r)) continue;
    ++covered;
    if (training.pairs[r].ground_truth == Truth::kEquivalent) ++equivalent;
  }
  return ExpectationFromCounts(covered, equivalent);
}

namespace {

class ForestBuilder {
 public:
  ForestBuilder(std::span<const std::uint8_t> is_match, const MetricMatrix& matrix,
                const ForestConfig& config)
      : is_match_(is_match), matrix_(matrix), config_(config), mask_((matrix.rows() + 63) / 64) {
    std::vector<std::size_t> all(matrix.rows());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      order_.push_back(SortedUnflagged(matrix.column(c), is_match, all));
      equality_.push_back(UsesEqualitySplits(matrix.descriptors()[c]));
    }
    weights_ = {1.0, config.match_class_weight};
  }

  std::vector<RiskRule> Run() {
    Node root;
    root.members.resize(matrix_.rows());
    std::iota(root.members.begin(), root.members.end(), 0u);
    for (std::size_t r = 0; r < matrix_.rows(); ++r) {
      (is_match_[r] ? root.counts.match : root.counts.unmatch)++;
    }
    if (config_.max_depth == 0) {
      Emit({Leaf{{}, root.counts}});
      return std::move(rules_);
    }
    queue_.push_back(std::move(root));
    while (!queue_.empty() && !exhausted_) {
      Node node = std::move(queue_.front());
      queue_.pop_front();
      Expand(node);
    }
    // Budget exhausted: close every pending tree at its current node.
    for (const Node& node : queue_) EmitTerminal(node);
    return std::move(rules_);
  }

 private:
  struct Leaf {
    std::vector<Predicate> predicates;
    ClassCounts counts;
  };
  struct Node {
    std::vector<std::uint32_t> members;  // ascending row ids
    ClassCounts counts;
    int depth = 0;
    std::vector<Predicate> path;
    std::vector<Leaf> leaves;  // finished sides along the path
  };

  // Unflagged members of `node` sorted by (value, row). Small nodes sort
  // their own rows; large ones filter the presorted column.
  void SortedMembers(const Node& node, std::size_t c, std::vector<Entry>& rows) {
    rows.clear();
    const auto column = matrix_.column(c);
    if (node.members.size() * 16 < matrix_.rows()) {
      for (std::uint32_t r : node.members) {
        if (!std::isnan(column[r])) rows.push_back(Entry{column[r], r, is_match_[r] ? 1u : 0u});
      }
      std::sort(rows.begin(), rows.end(), EntryLess);
      return;
    }
    for (const Entry& e : order_[c]) {
      if ((mask_[e.row >> 6] >> (e.row & 63)) & 1) rows.push_back(e);
    }
  }

  void Expand(const Node& node) {
    const bool use_mask = node.members.size() * 16 >= matrix_.rows();
    if (use_mask) {
      std::fill(mask_.begin(), mask_.end(), 0);
      for (std::uint32_t r : node.members) mask_[r >> 6] |= std::uint64_t{1} << (r & 63);
    }
    std::vector<Entry> rows;
    rows.reserve(node.counts.total());
    for (std::size_t c = 0; c < matrix_.cols(); ++c) {
      SortedMembers(node, c, rows);
      if (rows.size() < 2 * config_.min_leaf) continue;

      std::array<BestTracker, 2> trackers{
          BestTracker{config_.lambda, weights_[0], config_.min_leaf, std::nullopt},
          BestTracker{config_.lambda, weights_[1], config_.min_leaf, std::nullopt}};
      SweepCandidates(rows, equality_[c],
                      [&](double threshold, const ClassCounts& left, const ClassCounts& right) {
                        for (auto& t : trackers) t.Offer(c, equality_[c], threshold, left, right);
                      });
      for (std::size_t k = 0; k < trackers.size(); ++k) {
        if (!trackers[k].best) continue;
        const SplitOperation& op = *trackers[k].best;
        // Both class weights often pick the same partition; grow it once.
        if (k == 1 && trackers[0].best && trackers[0].best->threshold == op.threshold) continue;
        if (branches_ >= config_.max_trees) {
          exhausted_ = true;
          EmitTerminal(node);
          return;
        }
        ++branches_;
        Branch(node, op);
      }
    }
  }

  void Branch(const Node& node, const SplitOperation& op) {
    const double tau = config_.tau;
    const double tau_left = op.left.impurity();
    const double tau_right = op.right.impurity();
    const double tau_min = std::min(tau_left, tau_right);
    const double tau_max = std::max(tau_left, tau_right);
    Leaf left{Extend(node.path, op.LeftPredicate()), op.left};
    Leaf right{Extend(node.path, op.RightPredicate()), op.right};

    if (tau_min >= tau || tau_max < tau) {
      std::vector<Leaf> leaves = node.leaves;
      leaves.push_back(std::move(left));
      leaves.push_back(std::move(right));
      Emit(leaves);
      return;
    }

    const bool descend_left = tau_left > tau_right;
    Node child;
    child.depth = node.depth + 1;
    child.leaves = node.leaves;
    child.leaves.push_back(descend_left ? std::move(right) : std::move(left));
    const Predicate side = descend_left ? op.LeftPredicate() : op.RightPredicate();
    child.path = Extend(node.path, side);
    child.counts = descend_left ? op.left : op.right;

    if (child.depth >= config_.max_depth) {
      EmitTerminal(child);
      return;
    }
    // A node reached through the same predicates in another order holds the
    // same pairs; its subtree adds nothing new beyond its own path leaves.
    std::vector<Predicate> canonical = child.path;
    std::sort(canonical.begin(), canonical.end());
    if (!expanded_.insert(std::move(canonical)).second) {
      Emit(child.leaves);
      return;
    }
    const auto column = matrix_.column(op.metric);
    for (std::uint32_t r : node.members) {
      if (side.Holds(column[r])) child.members.push_back(r);
    }
    queue_.push_back(std::move(child));
  }

  static std::vector<Predicate> Extend(const std::vector<Predicate>& path, const Predicate& p) {
    std::vector<Predicate> out = path;
    out.push_back(p);
    return out;
  }

  // A tree that stops at `node` has the node itself as a leaf.
  void EmitTerminal(const Node& node) {
    std::vector<Leaf> leaves = node.leaves;
    leaves.push_back(Leaf{node.path, node.counts});
    Emit(leaves);
  }

  void Emit(const std::vector<Leaf>& leaves) {
    for (const Leaf& leaf : leaves) {
      const ClassCounts& counts = leaf.counts;
      if (counts.total() < config_.min_leaf) continue;
      if (!(counts.impurity() <= config_.tau) || !(counts.purity() >= 1.0 - config_.tau)) continue;
      const Truth consequent = counts.majority();
      std::vector<Predicate> canonical = leaf.predicates;
      std::sort(canonical.begin(), canonical.end());
      if (!seen_.emplace(std::move(canonical), consequent).second) continue;
      RiskRule rule;
      rule.predicates = leaf.predicates;
      rule.consequent = consequent;
      rule.purity = counts.purity();
      rule.support = counts.total();
      rule.equivalent_count = counts.match;
      rule.expectation_mu = ExpectationFromCounts(counts.total(), counts.match);
      rule.source_tree = branches_;
      rules_.push_back(std::move(rule));
    }
  }

  std::span<const std::uint8_t> is_match_;
  const MetricMatrix& matrix_;
  const ForestConfig& config_;
  std::vector<std::uint64_t> mask_;  // membership scratch for large nodes
  std::array<double, 2> weights_{};
  std::vector<std::vector<Entry>> order_;
  std::vector<bool> equality_;
  std::deque<Node> queue_;
  std::set<std::vector<Predicate>> expanded_;
  std::set<std::pair<std::vector<Predicate>, Truth>> seen_;
  std::vector<RiskRule> rules_;
  std::size_t branches_ = 0;
  bool exhausted_ = false;
};

}  // namespace

std::vector<RiskRule> GenerateRiskFeatures(std::span<const std::uint8_t> is_match,
                                           const MetricMatrix& matrix, const ForestConfig& config) {
  config.Validate();
  if (matrix.rows() == 0) Fail(ErrorKind::kDegenerate, "rule generation needs training pairs");
  if (is_match.size() != matrix.rows()) {
    Fail(ErrorKind::kInvalidArgument, "label count does not match matrix rows");
  }
  return ForestBuilder(is_match, matrix, config).Run();
}

std::vector<RiskRule> GenerateRiskFeatures(const Workload& training, const MetricMatrix& matrix,
                                           const ForestConfig& config) {
  if (training.size() == 0) Fail(ErrorKind::kDegenerate, "rule generation needs training pairs");
  if (matrix.rows() != training.size()) {
    Fail(ErrorKind::kInvalidArgument, "matrix rows do not match workload size");
  }
  std::vector<std::uint8_t> is_match(training.size());
  for (std::size_t i = 0; i < training.size(); ++i) {
    const auto& truth = training.pairs[i].ground_truth;
    if (!truth) {
      Fail(ErrorKind::kData, "training pair (" + training.pairs[i].left_id + ", " +
                                 training.pairs[i].right_id + ") lacks ground truth");
    }
    is_match[i] = *truth == Truth::kEquivalent;
  }
  return GenerateRiskFeatures(is_match, matrix, config);
}

std::string FormatRule(const RiskRule& rule, const std::vector<MetricDescriptor>& descriptors) {
  std::ostringstream out;
  out << "IF ";
  if (rule.predicates.empty()) out << "TRUE";
  for (std::size_t i = 0; i < rule.predicates.size(); ++i) {
    const Predicate& p = rule.predicates[i];
    if (i > 0) out << " AND ";
    out << descriptors.at(p.metric).Label() << ' ' << ToString(p.comparator) << ' '
        << FormatDouble(p.threshold);
  }
  out << " THEN " << ToString(rule.consequent) << " | " << FormatDouble(rule.purity) << ' '
      << rule.support << ' ' << FormatDouble(rule.expectation_mu);
  return out.str();
}

std::string SerializeRules(const std::vector<RiskRule>& rules,
                           const std::vector<MetricDescriptor>& descriptors) {
  std::string out(kRuleFileHeader);
  out += '\n';
  for (const auto& rule : rules) {
    out += FormatRule(rule, descriptors);
    out += '\n';
  }
  return out;
}

namespace {

std::optional<Comparator> ParseComparator(std::string_view text) {
  if (text == "<=") return Comparator::kLessEqual;
  if (text == ">") return Comparator::kGreater;
  if (text == "=") return Comparator::kEqual;
  if (text == "!=") return Comparator::kNotEqual;
  return std::nullopt;
}

}  // namespace

std::vector<RiskRule> ParseRules(std::string_view text,
                                 const std::vector<MetricDescriptor>& descriptors) {
  std::vector<RiskRule> rules;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_number = 0;
  bool saw_header = false;
  auto fail = [&](const std::string& why) {
    Fail(ErrorKind::kData, "rule file line " + std::to_string(line_number) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    if (line.front() == '#') {
      if (line_number == 1) {
        if (line != kRuleFileHeader) fail("unsupported rule file version '" + line + "'");
        saw_header = true;
      }
      continue;
    }
    if (!saw_header) fail("missing '" + std::string(kRuleFileHeader) + "' header");

    const auto bar = line.rfind(" | ");
    if (line.rfind("IF ", 0) != 0 || bar == std::string::npos) fail("expected 'IF ... | ...'");
    const std::string head = line.substr(3, bar - 3);
    const auto then = head.rfind(" THEN ");
    if (then == std::string::npos) fail("missing THEN");
    const std::string condition = head.substr(0, then);
    const std::string consequent = Trim(head.substr(then + 6));

    RiskRule rule;
    if (consequent == "equivalent") {
      rule.consequent = Truth::kEquivalent;
    } else if (consequent == "inequivalent") {
      rule.consequent = Truth::kInequivalent;
    } else {
      fail("unknown class '" + consequent + "'");
    }

    if (Trim(condition) != "TRUE") {
      const auto tokens = SplitWhitespace(condition);
      if ((tokens.size() + 1) % 4 != 0) fail("malformed condition");
      for (std::size_t i = 0; i < tokens.size(); i += 4) {
        if (i > 0 && tokens[i - 1] != "AND") fail("predicates must be joined by AND");
        Predicate p;
        bool found = false;
        for (std::size_t c = 0; c < descriptors.size(); ++c) {
          if (descriptors[c].Label() == tokens[i]) {
            p.metric = c;
            found = true;
            break;
          }
        }
        if (!found) fail("unknown metric '" + tokens[i] + "'");
        const auto comparator = ParseComparator(tokens[i + 1]);
        const auto threshold = ParseDouble(tokens[i + 2]);
        if (!comparator) fail("unknown comparator '" + tokens[i + 1] + "'");
        if (!threshold) fail("bad threshold '" + tokens[i + 2] + "'");
        p.comparator = *comparator;
        p.threshold = *threshold;
        rule.predicates.push_back(p);
      }
    }

    const auto stats = SplitWhitespace(line.substr(bar + 3));
    if (stats.size() != 3) fail("expected 'purity support mu'");
    const auto purity = ParseDouble(stats[0]);
    const auto support = ParseInt(stats[1]);
    const auto mu = ParseDouble(stats[2]);
    if (!purity || !support || *support < 0 || !mu) fail("bad rule statistics");
    rule.purity = *purity;
    rule.support = static_cast<std::size_t>(*support);
    rule.expectation_mu = *mu;
    rule.equivalent_count = static_cast<std::size_t>(
        std::llround(*mu * static_cast<double>(rule.support + 2) - 1.0));
    rule.source_tree = rules.size();
    rules.push_back(std::move(rule));
  }
  if (!saw_header) Fail(ErrorKind::kData, "rule file is empty or lacks its header");
  return rules;
}

FeatureVector Featurize(const MetricMatrix& matrix, std::size_t row,
                        const std::vector<RiskRule>& rules, double classifier_prob) {
  FeatureVector features;
  features.classifier_prob = classifier_prob;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    if (rules[k].Matches(matrix, row)) features.fired.push_back(static_cast<std::uint32_t>(k));
  }
  return features;
}

std::vector<FeatureVector> FeaturizeWorkload(const Workload& workload, const MetricMatrix& matrix,
                                             const std::vector<RiskRule>& rules) {
  if (matrix.rows() != workload.size()) {
    Fail(ErrorKind::kInvalidArgument, "matrix rows do not match workload size");
  }
  std::vector<FeatureVector> out;
  out.reserve(workload.size());
  for (std::size_t r = 0; r < workload.size(); ++r) {
    out.push_back(Featurize(matrix, r, rules, workload.pairs[r].classifier_prob));
  }
  return out;
}

}  // namespace learnrisk
