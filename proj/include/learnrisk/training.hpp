#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "learnrisk/data_model.hpp"
#include "learnrisk/feature_gen.hpp"
#include "learnrisk/risk_model.hpp"

namespace learnrisk {

// sigmoid(gamma_i - gamma_j) without overflow.
double PosteriorProb(double gamma_i, double gamma_j);
// 0.5 * (1 + g_i - g_j) for risk labels in {0, 1}.
double TargetProb(int risk_label_i, int risk_label_j);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 1000;
  double l1 = 1e-4;
  double l2 = 1e-4;
  std::size_t batch = 100000;  // comparisons per epoch when sampling
  std::uint64_t seed = 0;

  void Validate() const;
};

struct RiskTrainSet {
  std::vector<FeatureVector> features;
  std::vector<MachineLabel> labels;
  std::vector<std::uint8_t> mislabeled;  // risk labels

  std::size_t size() const { return features.size(); }
  std::size_t CountMislabeled() const;
};

// Pairs without ground truth are skipped.
RiskTrainSet MakeRiskTrainSet(const Workload& workload, const std::vector<FeatureVector>& features);

struct Comparison {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double target = 1.0;
};

// Full mislabeled x correct product in index order.
std::vector<Comparison> CrossComparisons(const RiskTrainSet& set);

// Free parameters are logarithms of the positive model parameters, laid out
// as rule weights, rule RSDs, bin RSDs, alpha, beta.
std::vector<double> PackFree(const RiskModelParams& model);
void UnpackFree(std::span<const double> free, RiskModelParams& model);

// Regularized cross-entropy summed over comparisons. When `gradient` is
// non-null it receives d(loss)/d(free parameters).
double Loss(const RiskModelParams& model, const RiskTrainSet& set,
            std::span<const Comparison> comparisons, double l1, double l2,
            std::vector<double>* gradient = nullptr);

// Returns the updated model; throws on a non-finite gradient.
RiskModelParams GradientStep(const RiskModelParams& model, const RiskTrainSet& set,
                             std::span<const Comparison> comparisons, const TrainConfig& config,
                             double* loss_before = nullptr);

struct TrainResult {
  RiskModelParams model;
  std::vector<double> loss_trace;  // loss at the start of each epoch
};

// Throws (kDegenerate) unless the set holds both mislabeled and correct pairs.
TrainResult Train(const RiskModelParams& initial, const RiskTrainSet& set,
                  const TrainConfig& config);

}  // namespace learnrisk
