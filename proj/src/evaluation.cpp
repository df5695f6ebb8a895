#include "learnrisk/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "learnrisk/error.hpp"
#include "learnrisk/text_io.hpp"

namespace learnrisk {

RocCurve RocAuroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    Fail(ErrorKind::kInvalidArgument, "score and label counts differ");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  for (double s : scores) {
    if (std::isnan(s)) Fail(ErrorKind::kInvalidArgument, "NaN score");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  std::uint64_t positives = 0;
  for (auto l : labels) positives += l ? 1 : 0;
  const std::uint64_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    Fail(ErrorKind::kData, "AUROC is undefined without both mislabeled and correct pairs");
  }

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  // Twice the area in units of one positive-negative pair, kept exact.
  std::uint64_t area2 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    std::uint64_t group_tp = 0;
    std::uint64_t group_fp = 0;
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] ? group_tp : group_fp)++;
      ++i;
    }
    area2 += group_fp * (2 * tp + group_tp);
    tp += group_tp;
    fp += group_fp;
    curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  curve.auroc = static_cast<double>(area2) /
                (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return curve;
}

std::string SerializeRoc(const RocCurve& curve) {
  std::ostringstream out;
  WriteRow(out, {"threshold", "fpr", "tpr"});
  for (const auto& p : curve.points) {
    WriteRow(out, {FormatDouble(p.threshold), FormatDouble(p.fpr), FormatDouble(p.tpr)});
  }
  return out.str();
}

double AmbiguityScore(double p) {
  if (!(p >= 0.0 && p <= 1.0)) Fail(ErrorKind::kInvalidArgument, "probability outside [0,1]");
  return 0.5 - std::abs(p - 0.5);
}

double UncertaintyScore(std::span<const double> ensemble_probs) {
  if (ensemble_probs.empty()) Fail(ErrorKind::kInvalidArgument, "empty ensemble");
  const double mean = std::accumulate(ensemble_probs.begin(), ensemble_probs.end(), 0.0) /
                      static_cast<double>(ensemble_probs.size());
  return mean * (1.0 - mean);
}

namespace {

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

KMeansResult KMeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng,
                    int max_iterations) {
  if (points.empty()) Fail(ErrorKind::kInvalidArgument, "k-means needs at least one point");
  if (k == 0) Fail(ErrorKind::kInvalidArgument, "k must be at least 1");
  const std::size_t n = points.size();

  KMeansResult result;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  result.centroids.push_back(points[UniformBelow(rng, n)]);
  while (result.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], SquaredDistance(points[i], result.centroids.back()));
      total += nearest[i];
    }
    if (!(total > 0.0)) break;  // fewer distinct points than k
    double target = UniformUnit(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= nearest[i];
      if (target < 0.0 && nearest[i] > 0.0) {
        pick = i;
        break;
      }
    }
    result.centroids.push_back(points[pick]);
  }

  const std::size_t dims = points[0].size();
  result.assignment.assign(n, 0);
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    bool changed = iteration == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < result.centroids.size(); ++c) {
        const double d = SquaredDistance(points[i], result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (best != result.assignment[i]) changed = true;
      result.assignment[i] = best;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(result.centroids.size(), std::vector<double>(dims, 0.0));
    std::vector<std::size_t> counts(result.centroids.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[result.assignment[i]];
      for (std::size_t d = 0; d < dims; ++d) sums[result.assignment[i]][d] += points[i][d];
    }
    for (std::size_t c = 0; c < result.centroids.size(); ++c) {
      if (counts[c] == 0) continue;  // keep an emptied centroid where it was
      for (std::size_t d = 0; d < dims; ++d) {
        result.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
  }
  return result;
}

ClusterModel FitClusters(const std::vector<std::vector<double>>& points,
                         std::span<const std::uint8_t> is_match, std::size_t k,
                         std::uint64_t seed) {
  if (points.size() != is_match.size()) {
    Fail(ErrorKind::kInvalidArgument, "point and label counts differ");
  }
  std::vector<std::vector<double>> match;
  std::vector<std::vector<double>> unmatch;
  for (std::size_t i = 0; i < points.size(); ++i) (is_match[i] ? match : unmatch).push_back(points[i]);
  if (match.empty() || unmatch.empty()) {
    Fail(ErrorKind::kDegenerate, "TrustScore needs training pairs of both classes");
  }
  Rng match_rng(SubSeed(seed, 1));
  Rng unmatch_rng(SubSeed(seed, 2));
  return {KMeans(match, k, match_rng).centroids, KMeans(unmatch, k, unmatch_rng).centroids};
}

double TrustRisk(std::span<const double> v, bool predicted_match, const ClusterModel& clusters) {
  const auto& same = predicted_match ? clusters.match_centroids : clusters.unmatch_centroids;
  const auto& other = predicted_match ? clusters.unmatch_centroids : clusters.match_centroids;
  if (same.empty() || other.empty()) Fail(ErrorKind::kInvalidArgument, "empty cluster for a class");
  auto nearest = [&](const std::vector<std::vector<double>>& centroids) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centroids) {
      if (c.size() != v.size()) Fail(ErrorKind::kInvalidArgument, "dimension mismatch");
      best = std::min(best, SquaredDistance(v, c));
    }
    return std::sqrt(best);
  };
  const double rho_same = nearest(same);
  const double rho_other = nearest(other);
  if (rho_same == 0.0) return 0.0;
  if (rho_other == 0.0) return std::numeric_limits<double>::infinity();
  return rho_same / rho_other;
}

FeatureScaler FeatureScaler::Fit(const MetricMatrix& matrix) {
  FeatureScaler s;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    double sum = 0.0;
    double sum2 = 0.0;
    std::size_t n = 0;
    for (double v : matrix.column(c)) {
      if (std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    for (double v : matrix.column(c)) {
      if (!std::isnan(v)) sum2 += (v - mean) * (v - mean);
    }
    const double sd = n > 1 ? std::sqrt(sum2 / static_cast<double>(n)) : 0.0;
    s.mean.push_back(mean);
    s.scale.push_back(sd > 0.0 ? sd : 1.0);
  }
  return s;
}

std::vector<double> FeatureScaler::Transform(const MetricMatrix& matrix, std::size_t row) const {
  if (matrix.cols() != mean.size()) Fail(ErrorKind::kInvalidArgument, "column count mismatch");
  std::vector<double> out(mean.size());
  for (std::size_t c = 0; c < mean.size(); ++c) {
    const double v = matrix.at(row, c);
    out[c] = std::isnan(v) ? 0.0 : (v - mean[c]) / scale[c];
  }
  return out;
}

std::vector<std::vector<double>> FeatureScaler::TransformAll(const MetricMatrix& matrix) const {
  std::vector<std::vector<double>> out;
  out.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) out.push_back(Transform(matrix, r));
  return out;
}

std::vector<std::string> SelectActiveBatch(std::vector<ScoredId> ranking, std::size_t k,
                                           const std::unordered_set<std::string>& exclude) {
  std::sort(ranking.begin(), ranking.end(), [](const ScoredId& a, const ScoredId& b) {
    return a.score > b.score || (a.score == b.score && a.id < b.id);
  });
  std::vector<std::string> out;
  for (const auto& entry : ranking) {
    if (out.size() >= k) break;
    if (exclude.contains(entry.id)) continue;
    out.push_back(entry.id);
  }
  return out;
}

}  // namespace learnrisk
