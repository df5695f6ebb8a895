#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "learnrisk/data_model.hpp"
#include "learnrisk/feature_gen.hpp"

namespace learnrisk {

// -exp(-(x - 0.5)^2 / (2 alpha^2)) + beta + 1
double InfluenceWeight(double x, double alpha, double beta);

struct FeatureComponent {
  double weight = 1.0;  // raw, positive
  double mu = 0.0;
  double sigma = 0.0;
};

struct PairDistribution {
  double mu = 0.0;
  double sigma2 = 0.0;
  double sigma() const;
};

// Weights are renormalized to sum to one over the given components.
PairDistribution AggregateDistribution(std::span<const FeatureComponent> components);

// Unmatching: upper theta-quantile of the equivalence probability.
// Matching: 1 - lower (1 - theta)-quantile.
double VarRisk(const PairDistribution& distribution, MachineLabel label, double theta);

struct RiskModelParams {
  double theta = 0.9;
  std::uint64_t rules_fingerprint = 0;
  std::vector<double> rule_weight;
  std::vector<double> rule_mu;
  std::vector<double> rule_rsd;
  double alpha = 0.2;
  double beta = 10.0;
  std::vector<double> bin_rsd;  // equal-width bins over [0, 1]

  static RiskModelParams Initial(const std::vector<RiskRule>& rules, std::size_t bins = 10,
                                 double theta = 0.9);
  std::size_t rule_count() const { return rule_weight.size(); }
  std::size_t bin_count() const { return bin_rsd.size(); }
  std::size_t BinOf(double x) const;
  void Validate() const;

  friend bool operator==(const RiskModelParams&, const RiskModelParams&) = default;
};

// Components of one pair: fired rules in index order, then the classifier output.
std::vector<FeatureComponent> ComponentsOf(const RiskModelParams& model,
                                           const FeatureVector& features);
PairDistribution DistributionOf(const RiskModelParams& model, const FeatureVector& features);
double PairRisk(const RiskModelParams& model, const FeatureVector& features, MachineLabel label);

struct RiskScore {
  std::size_t index = 0;  // position in the scored workload
  double var = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double theta = 0.9;
};

// Descending VaR; ties by (left id, right id).
std::vector<RiskScore> ScoreWorkload(const Workload& workload,
                                     const std::vector<FeatureVector>& features,
                                     const RiskModelParams& model);

// Columns: left_id, right_id, var, mu, sigma, machine_label, classifier_prob, fired_rules.
std::string SerializeRanking(const Workload& workload, const std::vector<FeatureVector>& features,
                             const std::vector<RiskScore>& ranking);

inline constexpr std::string_view kModelFileHeader = "learnrisk-model v1";
std::string SerializeModel(const RiskModelParams& model);
// Throws when the file was trained against a different rule file.
RiskModelParams ParseModel(std::string_view text,
                           std::optional<std::uint64_t> expected_rules_fingerprint = std::nullopt);

}  // namespace learnrisk
