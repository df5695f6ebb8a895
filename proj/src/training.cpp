#include "learnrisk/training.hpp"

#include <cmath>
#include <string>

#include "learnrisk/error.hpp"
#include "learnrisk/normal.hpp"
#include "learnrisk/random.hpp"

namespace learnrisk {

double PosteriorProb(double gamma_i, double gamma_j) {
  const double delta = gamma_i - gamma_j;
  if (delta >= 0.0) return 1.0 / (1.0 + std::exp(-delta));
  const double e = std::exp(delta);
  return e / (1.0 + e);
}

double TargetProb(int risk_label_i, int risk_label_j) {
  return 0.5 * (1.0 + risk_label_i - risk_label_j);
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) Fail(ErrorKind::kConfig, "learning_rate must be positive");
  if (epochs < 0) Fail(ErrorKind::kConfig, "epochs must be non-negative");
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) Fail(ErrorKind::kConfig, "regularization must be non-negative");
  if (batch == 0) Fail(ErrorKind::kConfig, "batch must be positive");
}

std::size_t RiskTrainSet::CountMislabeled() const {
  std::size_t n = 0;
  for (auto m : mislabeled) n += m;
  return n;
}

RiskTrainSet MakeRiskTrainSet(const Workload& workload,
                              const std::vector<FeatureVector>& features) {
  if (features.size() != workload.size()) {
    Fail(ErrorKind::kInvalidArgument, "feature count does not match workload size");
  }
  RiskTrainSet set;
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const auto& pair = workload.pairs[i];
    if (!pair.risk_label) continue;
    set.features.push_back(features[i]);
    set.labels.push_back(pair.machine_label);
    set.mislabeled.push_back(*pair.risk_label ? 1 : 0);
  }
  return set;
}

std::vector<Comparison> CrossComparisons(const RiskTrainSet& set) {
  std::vector<std::uint32_t> bad;
  std::vector<std::uint32_t> good;
  for (std::uint32_t i = 0; i < set.size(); ++i) (set.mislabeled[i] ? bad : good).push_back(i);
  std::vector<Comparison> out;
  out.reserve(bad.size() * good.size());
  for (auto i : bad) {
    for (auto j : good) out.push_back({i, j, 1.0});
  }
  return out;
}

std::vector<double> PackFree(const RiskModelParams& model) {
  std::vector<double> free;
  free.reserve(2 * model.rule_count() + model.bin_count() + 2);
  for (double w : model.rule_weight) free.push_back(std::log(w));
  for (double r : model.rule_rsd) free.push_back(std::log(r));
  for (double r : model.bin_rsd) free.push_back(std::log(r));
  free.push_back(std::log(model.alpha));
  free.push_back(std::log(model.beta));
  return free;
}

void UnpackFree(std::span<const double> free, RiskModelParams& model) {
  const std::size_t k = model.rule_count();
  const std::size_t b = model.bin_count();
  if (free.size() != 2 * k + b + 2) {
    Fail(ErrorKind::kInvalidArgument, "free parameter vector has the wrong length");
  }
  for (std::size_t i = 0; i < k; ++i) model.rule_weight[i] = std::exp(free[i]);
  for (std::size_t i = 0; i < k; ++i) model.rule_rsd[i] = std::exp(free[k + i]);
  for (std::size_t i = 0; i < b; ++i) model.bin_rsd[i] = std::exp(free[2 * k + i]);
  model.alpha = std::exp(free[2 * k + b]);
  model.beta = std::exp(free[2 * k + b + 1]);
}

namespace {

double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Risk of one pair and its sparse gradient with respect to free parameters.
struct RiskWithGradient {
  double gamma = 0.0;
  std::vector<std::pair<std::size_t, double>> grad;
};

RiskWithGradient PairRiskGradient(const RiskModelParams& model, const FeatureVector& features,
                                  MachineLabel label) {
  const std::size_t k_rules = model.rule_count();
  const std::size_t bins = model.bin_count();
  const std::size_t alpha_index = 2 * k_rules + bins;
  const auto components = ComponentsOf(model, features);
  const std::size_t n = components.size();

  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  double mu = 0.0;
  double s = 0.0;
  for (const auto& c : components) {
    const double w = c.weight / total;
    mu += w * c.mu;
    s += w * w * c.sigma * c.sigma;
  }
  const double sigma = std::sqrt(s);

  const bool matching = label == MachineLabel::kMatching;
  const double p = matching ? 1.0 - model.theta : model.theta;
  const QuantileGradient q = TruncatedQuantileGradient(p, std::clamp(mu, 0.0, 1.0), sigma);
  const double sign = matching ? -1.0 : 1.0;

  RiskWithGradient out;
  out.gamma = matching ? 1.0 - q.value : q.value;

  // d(gamma)/d(raw weight) and d(gamma)/d(sigma) per component.
  std::vector<double> d_weight(n);
  std::vector<double> d_sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& c = components[j];
    const double w = c.weight / total;
    const double dmu = (c.mu - mu) / total;
    const double dsig = sigma > 0.0 ? (w * c.sigma * c.sigma - s) / (total * sigma) : 0.0;
    d_weight[j] = sign * (q.d_mu * dmu + q.d_sigma * dsig);
    d_sigma[j] = sigma > 0.0 ? sign * q.d_sigma * w * w * c.sigma / sigma : 0.0;
  }

  for (std::size_t j = 0; j + 1 < n; ++j) {
    const std::size_t rule = features.fired[j];
    out.grad.emplace_back(rule, d_weight[j] * components[j].weight);
    out.grad.emplace_back(k_rules + rule, d_sigma[j] * components[j].sigma);
  }
  const auto& c = components[n - 1];
  const double x = features.classifier_prob;
  const double dx = x - 0.5;
  const double e = std::exp(-dx * dx / (2.0 * model.alpha * model.alpha));
  out.grad.emplace_back(2 * k_rules + model.BinOf(x), d_sigma[n - 1] * c.sigma);
  out.grad.emplace_back(alpha_index,
                        d_weight[n - 1] * (-e * dx * dx / (model.alpha * model.alpha)));
  out.grad.emplace_back(alpha_index + 1, d_weight[n - 1] * model.beta);
  return out;
}

// Visits materialized parameters in free-parameter order.
template <typename Model, typename F>
void ForEachMaterialized(Model& model, F&& f) {
  std::size_t index = 0;
  for (auto& v : model.rule_weight) f(index++, v);
  for (auto& v : model.rule_rsd) f(index++, v);
  for (auto& v : model.bin_rsd) f(index++, v);
  f(index++, model.alpha);
  f(index++, model.beta);
}

}  // namespace

double Loss(const RiskModelParams& model, const RiskTrainSet& set,
            std::span<const Comparison> comparisons, double l1, double l2,
            std::vector<double>* gradient) {
  const std::size_t n = set.size();
  // Only pairs that appear in some comparison need a risk value.
  std::vector<std::uint8_t> used(n, 0);
  for (const auto& c : comparisons) {
    if (c.i >= n || c.j >= n) Fail(ErrorKind::kInvalidArgument, "comparison index out of range");
    used[c.i] = used[c.j] = 1;
  }
  std::vector<RiskWithGradient> risks(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!used[i]) continue;
    if (gradient) {
      risks[i] = PairRiskGradient(model, set.features[i], set.labels[i]);
    } else {
      risks[i].gamma = PairRisk(model, set.features[i], set.labels[i]);
    }
  }

  double loss = 0.0;
  std::vector<double> coefficient(gradient ? n : 0, 0.0);
  for (const auto& c : comparisons) {
    const double delta = risks[c.i].gamma - risks[c.j].gamma;
    loss += c.target * Softplus(-delta) + (1.0 - c.target) * Softplus(delta);
    if (gradient) {
      const double slope = PosteriorProb(risks[c.i].gamma, risks[c.j].gamma) - c.target;
      coefficient[c.i] += slope;
      coefficient[c.j] -= slope;
    }
  }
  ForEachMaterialized(model, [&](std::size_t, double v) { loss += l1 * v + l2 * v * v; });

  if (gradient) {
    gradient->assign(2 * model.rule_count() + model.bin_count() + 2, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (coefficient[i] == 0.0) continue;
      for (const auto& [index, g] : risks[i].grad) (*gradient)[index] += coefficient[i] * g;
    }
    // d(l1 v + l2 v^2)/d(log v) = l1 v + 2 l2 v^2
    ForEachMaterialized(model, [&](std::size_t index, double v) {
      (*gradient)[index] += l1 * v + 2.0 * l2 * v * v;
    });
  }
  return loss;
}

RiskModelParams GradientStep(const RiskModelParams& model, const RiskTrainSet& set,
                             std::span<const Comparison> comparisons, const TrainConfig& config,
                             double* loss_before) {
  std::vector<double> gradient;
  const double loss = Loss(model, set, comparisons, config.l1, config.l2, &gradient);
  if (loss_before) *loss_before = loss;
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    if (!std::isfinite(gradient[i])) {
      Fail(ErrorKind::kDegenerate,
           "non-finite gradient for free parameter " + std::to_string(i) + " (loss " +
               std::to_string(loss) + ")");
    }
  }
  // exp(log v - lr g) without the log round trip, so a zero step is exact.
  RiskModelParams next = model;
  ForEachMaterialized(next, [&](std::size_t index, double& v) {
    v *= std::exp(-config.learning_rate * gradient[index]);
  });
  return next;
}

TrainResult Train(const RiskModelParams& initial, const RiskTrainSet& set,
                  const TrainConfig& config) {
  config.Validate();
  initial.Validate();
  const std::size_t bad = set.CountMislabeled();
  const std::size_t good = set.size() - bad;
  if (bad == 0 || good == 0) {
    Fail(ErrorKind::kDegenerate, "risk training needs both mislabeled and correctly labeled pairs (" +
                                     std::to_string(bad) + " mislabeled, " + std::to_string(good) +
                                     " correct)");
  }

  TrainResult result{initial, {}};
  std::vector<Comparison> comparisons;
  std::vector<std::uint32_t> bad_index;
  std::vector<std::uint32_t> good_index;
  const bool sample = bad * good > config.batch;
  if (sample) {
    for (std::uint32_t i = 0; i < set.size(); ++i) {
      (set.mislabeled[i] ? bad_index : good_index).push_back(i);
    }
  } else {
    comparisons = CrossComparisons(set);
  }
  Rng rng(config.seed);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (sample) {
      comparisons.resize(config.batch);
      for (auto& c : comparisons) {
        c = {bad_index[UniformBelow(rng, bad_index.size())],
             good_index[UniformBelow(rng, good_index.size())], 1.0};
      }
    }
    double loss = 0.0;
    result.model = GradientStep(result.model, set, comparisons, config, &loss);
    result.loss_trace.push_back(loss);
  }
  return result;
}

}  // namespace learnrisk
