#include "learnrisk/reference_scorer.hpp"

#include <cmath>

#include "learnrisk/error.hpp"
#include "learnrisk/random.hpp"

namespace learnrisk {

void ReferenceConfig::Validate() const {
  if (!(learning_rate > 0.0)) Fail(ErrorKind::kConfig, "classifier learning_rate must be positive");
  if (epochs < 0) Fail(ErrorKind::kConfig, "classifier epochs must be non-negative");
  if (!(l2 >= 0.0)) Fail(ErrorKind::kConfig, "classifier l2 must be non-negative");
}

namespace {

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::vector<std::size_t> ResolveColumns(const LinearScorer& scorer, const MetricMatrix& matrix) {
  std::vector<std::size_t> out;
  for (const auto& label : scorer.columns) {
    const auto c = matrix.FindColumn(label);
    if (!c) Fail(ErrorKind::kConfig, "metric matrix lacks scorer column " + label);
    out.push_back(*c);
  }
  return out;
}

double Linear(const LinearScorer& scorer, std::span<const double> row) {
  double t = scorer.intercept;
  for (std::size_t c = 0; c < row.size(); ++c) t += scorer.coefficient[c] * row[c];
  return t;
}

}  // namespace

std::vector<std::vector<double>> DesignRows(const LinearScorer& scorer, const MetricMatrix& matrix) {
  const auto columns = ResolveColumns(scorer, matrix);
  std::vector<std::vector<double>> rows(matrix.rows(), std::vector<double>(columns.size()));
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double v = matrix.at(r, columns[c]);
      rows[r][c] = std::isnan(v) ? 0.0 : (v - scorer.mean[c]) / scorer.scale[c];
    }
  }
  return rows;
}

double LogisticLoss(const LinearScorer& scorer, const std::vector<std::vector<double>>& rows,
                    std::span<const std::uint8_t> is_match, double l2,
                    std::vector<double>* gradient) {
  const std::size_t d = scorer.coefficient.size();
  if (gradient) gradient->assign(d + 1, 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double t = Linear(scorer, rows[r]);
    loss += is_match[r] ? Softplus(-t) : Softplus(t);
    if (gradient) {
      const double slope = Sigmoid(t) - (is_match[r] ? 1.0 : 0.0);
      (*gradient)[0] += slope;
      for (std::size_t c = 0; c < d; ++c) (*gradient)[c + 1] += slope * rows[r][c];
    }
  }
  const double n = static_cast<double>(rows.size());
  loss /= n;
  double norm2 = 0.0;
  for (double w : scorer.coefficient) norm2 += w * w;
  loss += 0.5 * l2 * norm2;
  if (gradient) {
    for (auto& g : *gradient) g /= n;
    for (std::size_t c = 0; c < d; ++c) (*gradient)[c + 1] += l2 * scorer.coefficient[c];
  }
  return loss;
}

LinearScorer FitReference(const MetricMatrix& matrix, std::span<const std::uint8_t> is_match,
                          const ReferenceConfig& config) {
  config.Validate();
  if (is_match.size() != matrix.rows()) {
    Fail(ErrorKind::kInvalidArgument, "label count does not match matrix rows");
  }
  std::size_t positives = 0;
  for (auto m : is_match) positives += m ? 1 : 0;
  if (positives == 0 || positives == is_match.size()) {
    Fail(ErrorKind::kDegenerate, "reference scorer needs training pairs of both classes");
  }

  LinearScorer scorer;
  if (config.columns.empty()) {
    for (const auto& d : matrix.descriptors()) scorer.columns.push_back(d.Label());
  } else {
    scorer.columns = config.columns;
  }
  for (std::size_t c : ResolveColumns(scorer, matrix)) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : matrix.column(c)) {
      if (!std::isnan(v)) {
        sum += v;
        ++n;
      }
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    double sum2 = 0.0;
    for (double v : matrix.column(c)) {
      if (!std::isnan(v)) sum2 += (v - mean) * (v - mean);
    }
    const double sd = n > 0 ? std::sqrt(sum2 / static_cast<double>(n)) : 0.0;
    scorer.mean.push_back(mean);
    scorer.scale.push_back(sd > 0.0 ? sd : 1.0);
  }
  scorer.coefficient.assign(scorer.columns.size(), 0.0);
  const double negatives = static_cast<double>(is_match.size() - positives);
  scorer.intercept = std::log(static_cast<double>(positives) / negatives);

  const auto rows = DesignRows(scorer, matrix);
  std::vector<double> gradient;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LogisticLoss(scorer, rows, is_match, config.l2, &gradient);
    scorer.intercept -= config.learning_rate * gradient[0];
    for (std::size_t c = 0; c < scorer.coefficient.size(); ++c) {
      scorer.coefficient[c] -= config.learning_rate * gradient[c + 1];
    }
  }
  return scorer;
}

LinearScorer FitReference(const Workload& train, const MetricMatrix& matrix,
                          const ReferenceConfig& config) {
  if (train.size() != matrix.rows()) {
    Fail(ErrorKind::kInvalidArgument, "matrix rows do not match workload size");
  }
  std::vector<std::uint8_t> is_match(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!train.pairs[i].ground_truth) {
      Fail(ErrorKind::kData, "classifier training pair lacks ground truth");
    }
    is_match[i] = *train.pairs[i].ground_truth == Truth::kEquivalent;
  }
  return FitReference(matrix, is_match, config);
}

std::vector<double> ScoreReference(const LinearScorer& scorer, const MetricMatrix& matrix) {
  const auto rows = DesignRows(scorer, matrix);
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out[r] = Sigmoid(Linear(scorer, rows[r]));
  return out;
}

std::vector<std::vector<double>> BootstrapEnsemble(const MetricMatrix& train,
                                                   std::span<const std::uint8_t> is_match,
                                                   const MetricMatrix& target, std::size_t members,
                                                   const ReferenceConfig& config) {
  std::vector<std::vector<double>> out(target.rows());
  const std::size_t n = train.rows();
  for (std::size_t m = 0; m < members; ++m) {
    Rng rng(SubSeed(config.seed, m));
    std::vector<std::size_t> rows(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = UniformBelow(rng, n);
      labels[i] = is_match[rows[i]];
    }
    MetricMatrix sample(train.descriptors(), n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < train.cols(); ++c) {
        const double v = train.at(rows[i], c);
        sample.set(i, c, std::isnan(v) ? std::nullopt : std::optional<double>(v));
      }
    }
    std::size_t positives = 0;
    for (auto l : labels) positives += l;
    if (positives == 0 || positives == n) continue;  // a one-class resample has no model
    const auto probs = ScoreReference(FitReference(sample, labels, config), target);
    for (std::size_t r = 0; r < probs.size(); ++r) out[r].push_back(probs[r]);
  }
  return out;
}

}  // namespace learnrisk
