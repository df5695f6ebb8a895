#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "learnrisk/data_model.hpp"
#include "learnrisk/metrics.hpp"

namespace learnrisk {

struct ReferenceConfig {
  double learning_rate = 0.5;
  int epochs = 500;
  double l2 = 1e-3;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;  // metric labels to use; empty means all

  void Validate() const;
};

// Logistic model over standardized metric columns.
struct LinearScorer {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> coefficient;
  double intercept = 0.0;
};

// Standardized design rows for the scorer's columns; flagged cells become 0.
std::vector<std::vector<double>> DesignRows(const LinearScorer& scorer, const MetricMatrix& matrix);

// Mean logistic loss plus (l2 / 2) |coefficient|^2. `gradient` receives
// d/d(intercept) followed by d/d(coefficient).
double LogisticLoss(const LinearScorer& scorer, const std::vector<std::vector<double>>& rows,
                    std::span<const std::uint8_t> is_match, double l2,
                    std::vector<double>* gradient = nullptr);

LinearScorer FitReference(const MetricMatrix& matrix, std::span<const std::uint8_t> is_match,
                          const ReferenceConfig& config);
LinearScorer FitReference(const Workload& train, const MetricMatrix& matrix,
                          const ReferenceConfig& config);

std::vector<double> ScoreReference(const LinearScorer& scorer, const MetricMatrix& matrix);

// Probabilities of `members` scorers fit on bootstrap resamples of the
// training rows; result[i] lists the members' probabilities for target row i.
std::vector<std::vector<double>> BootstrapEnsemble(const MetricMatrix& train,
                                                   std::span<const std::uint8_t> is_match,
                                                   const MetricMatrix& target, std::size_t members,
                                                   const ReferenceConfig& config);

}  // namespace learnrisk
