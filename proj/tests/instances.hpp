#pragma once

// Random problem instances shared by the unit tests and the acceptance run.

#include <random>
#include <vector>

#include "learnrisk/metrics.hpp"
#include "learnrisk/training.hpp"

namespace learnrisk::instances {

// Column 0 is real-valued (threshold splits); 1 boolean and 2 a count
// (equality splits).
inline MetricMatrix SplitMatrix(std::size_t rows) {
  const Schema s({{"x", ValueKind::kNumber}, {"names", ValueKind::kEntitySet}});
  return MetricMatrix({MakeDescriptor(s, "x", "numeric-difference"),
                       MakeDescriptor(s, "x", "numeric-equality"),
                       MakeDescriptor(s, "names", "distinct-entity")},
                      rows);
}

struct SplitSet {
  MetricMatrix matrix;
  std::vector<std::uint8_t> is_match;
  std::vector<std::size_t> rows;  // a random subset of the matrix rows
};

// Up to max_pairs labeled rows with heavy ties and some flagged cells.
inline SplitSet RandomSplitSet(std::mt19937_64& rng, std::size_t max_pairs) {
  const std::size_t n = 2 + rng() % (max_pairs - 1);
  SplitSet s{SplitMatrix(n), std::vector<std::uint8_t>(n), {}};
  const int levels = 2 + rng() % 20;
  for (std::size_t r = 0; r < n; ++r) {
    s.is_match[r] = rng() % 3 == 0;
    s.matrix.set(r, 0, static_cast<double>(rng() % levels) / 4.0);
    s.matrix.set(r, 1, static_cast<double>(rng() % 2));
    s.matrix.set(r, 2, rng() % 7 == 0 ? std::nullopt : std::optional<double>(rng() % 4));
    if (rng() % 5) s.rows.push_back(r);
  }
  return s;
}

struct RiskInstance {
  RiskModelParams model;
  RiskTrainSet set;
  std::vector<Comparison> comparisons;
};

// Random positive parameters, random rule firings and random comparisons.
inline RiskInstance RandomRiskInstance(std::mt19937_64& rng, std::size_t rules, std::size_t pairs,
                                       std::size_t comparisons) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RiskInstance in;
  for (std::size_t k = 0; k < rules; ++k) {
    in.model.rule_weight.push_back(0.2 + 3.0 * unit(rng));
    in.model.rule_mu.push_back(0.02 + 0.96 * unit(rng));
    in.model.rule_rsd.push_back(0.05 + 0.6 * unit(rng));
  }
  in.model.bin_rsd.resize(1 + rng() % 10);
  for (auto& b : in.model.bin_rsd) b = 0.05 + 0.6 * unit(rng);
  in.model.alpha = 0.1 + 0.4 * unit(rng);
  in.model.beta = 0.5 + 10.0 * unit(rng);
  in.model.theta = 0.55 + 0.4 * unit(rng);
  for (std::size_t i = 0; i < pairs; ++i) {
    FeatureVector f;
    for (std::uint32_t k = 0; k < rules; ++k) {
      if (rng() % 3 == 0) f.fired.push_back(k);
    }
    f.classifier_prob = 0.02 + 0.96 * unit(rng);
    in.set.features.push_back(f);
    in.set.labels.push_back(DeriveMachineLabel(f.classifier_prob));
    in.set.mislabeled.push_back(rng() % 3 == 0);
  }
  for (std::size_t c = 0; c < comparisons; ++c) {
    const auto i = static_cast<std::uint32_t>(rng() % pairs);
    const auto j = static_cast<std::uint32_t>(rng() % pairs);
    in.comparisons.push_back({i, j, TargetProb(in.set.mislabeled[i], in.set.mislabeled[j])});
  }
  return in;
}

}  // namespace learnrisk::instances
