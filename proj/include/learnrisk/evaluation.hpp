#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "learnrisk/metrics.hpp"
#include "learnrisk/random.hpp"

namespace learnrisk {

struct RocPoint {
  double threshold = 0.0;  // +inf for the (0, 0) anchor
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auroc = 0.5;
};

// Higher score = riskier. Throws unless both classes are present.
RocCurve RocAuroc(std::span<const double> scores, std::span<const std::uint8_t> labels);
std::string SerializeRoc(const RocCurve& curve);

double AmbiguityScore(double p);
double UncertaintyScore(std::span<const double> ensemble_probs);

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
};

// Lloyd iterations from a k-means++ start. Uses min(k, distinct points) centroids.
KMeansResult KMeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng,
                    int max_iterations = 100);

struct ClusterModel {
  std::vector<std::vector<double>> match_centroids;
  std::vector<std::vector<double>> unmatch_centroids;
};

ClusterModel FitClusters(const std::vector<std::vector<double>>& points,
                         std::span<const std::uint8_t> is_match, std::size_t k, std::uint64_t seed);

// rho_same / rho_other; 0 when both distances vanish.
double TrustRisk(std::span<const double> v, bool predicted_match, const ClusterModel& clusters);

// Standardizes metric rows by reference statistics; flagged cells take the mean.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static FeatureScaler Fit(const MetricMatrix& matrix);
  std::vector<double> Transform(const MetricMatrix& matrix, std::size_t row) const;
  std::vector<std::vector<double>> TransformAll(const MetricMatrix& matrix) const;
};

struct ScoredId {
  std::string id;
  double score = 0.0;
};

// Top-k by descending score, ties by ascending id, skipping excluded ids.
std::vector<std::string> SelectActiveBatch(std::vector<ScoredId> ranking, std::size_t k,
                                           const std::unordered_set<std::string>& exclude);

}  // namespace learnrisk
