#include "learnrisk/risk_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>

#include "learnrisk/error.hpp"
#include "learnrisk/normal.hpp"
#include "learnrisk/text_io.hpp"

namespace learnrisk {

double InfluenceWeight(double x, double alpha, double beta) {
  const double d = x - 0.5;
  return -std::exp(-d * d / (2.0 * alpha * alpha)) + beta + 1.0;
}

double PairDistribution::sigma() const { return std::sqrt(sigma2); }

PairDistribution AggregateDistribution(std::span<const FeatureComponent> components) {
  if (components.empty()) Fail(ErrorKind::kInvalidArgument, "no active feature");
  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  if (!(total > 0.0)) Fail(ErrorKind::kInvalidArgument, "feature weights must be positive");
  PairDistribution d;
  for (const auto& c : components) {
    const double w = c.weight / total;
    d.mu += w * c.mu;
    d.sigma2 += w * w * c.sigma * c.sigma;
  }
  d.mu = std::clamp(d.mu, 0.0, 1.0);
  return d;
}

double VarRisk(const PairDistribution& distribution, MachineLabel label, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) Fail(ErrorKind::kInvalidArgument, "theta must lie in (0,1)");
  const double sigma = distribution.sigma();
  if (label == MachineLabel::kUnmatching) {
    return TruncatedQuantile(theta, distribution.mu, sigma);
  }
  return 1.0 - TruncatedQuantile(1.0 - theta, distribution.mu, sigma);
}

RiskModelParams RiskModelParams::Initial(const std::vector<RiskRule>& rules, std::size_t bins,
                                         double theta) {
  if (bins == 0) Fail(ErrorKind::kConfig, "classifier output needs at least one bin");
  RiskModelParams p;
  p.theta = theta;
  p.rule_weight.assign(rules.size(), 1.0);
  p.rule_rsd.assign(rules.size(), 0.3);
  for (const auto& rule : rules) p.rule_mu.push_back(rule.expectation_mu);
  p.bin_rsd.assign(bins, 0.3);
  return p;
}

std::size_t RiskModelParams::BinOf(double x) const {
  const auto bins = static_cast<double>(bin_rsd.size());
  const double scaled = std::floor(std::clamp(x, 0.0, 1.0) * bins);
  return std::min(static_cast<std::size_t>(scaled), bin_rsd.size() - 1);
}

void RiskModelParams::Validate() const {
  if (!(theta > 0.0 && theta < 1.0)) Fail(ErrorKind::kConfig, "theta must lie in (0,1)");
  if (rule_mu.size() != rule_weight.size() || rule_rsd.size() != rule_weight.size()) {
    Fail(ErrorKind::kConfig, "rule parameter vectors differ in length");
  }
  if (bin_rsd.empty()) Fail(ErrorKind::kConfig, "classifier output needs at least one bin");
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!std::all_of(rule_weight.begin(), rule_weight.end(), positive) ||
      !std::all_of(rule_rsd.begin(), rule_rsd.end(), positive) ||
      !std::all_of(bin_rsd.begin(), bin_rsd.end(), positive) || !positive(alpha) ||
      !positive(beta)) {
    Fail(ErrorKind::kConfig, "model parameters must be positive and finite");
  }
  for (double mu : rule_mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) Fail(ErrorKind::kConfig, "rule expectation outside [0,1]");
  }
}

std::vector<FeatureComponent> ComponentsOf(const RiskModelParams& model,
                                           const FeatureVector& features) {
  std::vector<FeatureComponent> out;
  out.reserve(features.fired.size() + 1);
  for (std::uint32_t k : features.fired) {
    if (k >= model.rule_count()) Fail(ErrorKind::kInvalidArgument, "fired rule id out of range");
    out.push_back({model.rule_weight[k], model.rule_mu[k], model.rule_rsd[k] * model.rule_mu[k]});
  }
  const double x = features.classifier_prob;
  out.push_back({InfluenceWeight(x, model.alpha, model.beta), x,
                 model.bin_rsd[model.BinOf(x)] * x});
  return out;
}

PairDistribution DistributionOf(const RiskModelParams& model, const FeatureVector& features) {
  const auto components = ComponentsOf(model, features);
  return AggregateDistribution(components);
}

double PairRisk(const RiskModelParams& model, const FeatureVector& features, MachineLabel label) {
  return VarRisk(DistributionOf(model, features), label, model.theta);
}

std::vector<RiskScore> ScoreWorkload(const Workload& workload,
                                     const std::vector<FeatureVector>& features,
                                     const RiskModelParams& model) {
  if (features.size() != workload.size()) {
    Fail(ErrorKind::kInvalidArgument, "feature count does not match workload size");
  }
  std::vector<RiskScore> scores(workload.size());
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const PairDistribution d = DistributionOf(model, features[i]);
    scores[i] = {i, VarRisk(d, workload.pairs[i].machine_label, model.theta), d.mu, d.sigma(),
                 model.theta};
  }
  std::sort(scores.begin(), scores.end(), [&](const RiskScore& x, const RiskScore& y) {
    if (x.var != y.var) return x.var > y.var;
    const auto& a = workload.pairs[x.index];
    const auto& b = workload.pairs[y.index];
    return std::tie(a.left_id, a.right_id, x.index) < std::tie(b.left_id, b.right_id, y.index);
  });
  return scores;
}

std::string SerializeRanking(const Workload& workload, const std::vector<FeatureVector>& features,
                             const std::vector<RiskScore>& ranking) {
  std::ostringstream out;
  WriteRow(out, {"left_id", "right_id", "var", "mu", "sigma", "machine_label", "classifier_prob",
                 "fired_rules"});
  for (const auto& s : ranking) {
    const auto& pair = workload.pairs.at(s.index);
    std::string fired;
    for (std::uint32_t k : features.at(s.index).fired) {
      if (!fired.empty()) fired += ';';
      fired += std::to_string(k);
    }
    WriteRow(out, {pair.left_id, pair.right_id, FormatDouble(s.var), FormatDouble(s.mu),
                   FormatDouble(s.sigma), std::string(ToString(pair.machine_label)),
                   FormatDouble(pair.classifier_prob), fired});
  }
  return out.str();
}

std::string SerializeModel(const RiskModelParams& model) {
  std::ostringstream out;
  out << kModelFileHeader << '\n';
  out << "theta " << FormatDouble(model.theta) << '\n';
  out << "rules_fingerprint " << model.rules_fingerprint << '\n';
  out << "bins " << model.bin_count();
  for (std::size_t b = 0; b <= model.bin_count(); ++b) {
    out << ' ' << FormatDouble(static_cast<double>(b) / static_cast<double>(model.bin_count()));
  }
  out << '\n';
  out << "features " << model.rule_count() << '\n';
  for (std::size_t k = 0; k < model.rule_count(); ++k) {
    out << "feature " << k << ' ' << FormatDouble(model.rule_weight[k]) << ' '
        << FormatDouble(model.rule_mu[k]) << ' ' << FormatDouble(model.rule_rsd[k]) << '\n';
  }
  out << "alpha " << FormatDouble(model.alpha) << '\n';
  out << "beta " << FormatDouble(model.beta) << '\n';
  out << "bin_rsd";
  for (double r : model.bin_rsd) out << ' ' << FormatDouble(r);
  out << '\n';
  return out.str();
}

RiskModelParams ParseModel(std::string_view text,
                           std::optional<std::uint64_t> expected_rules_fingerprint) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_number = 0;
  auto fail = [&](const std::string& why) {
    Fail(ErrorKind::kData, "model file line " + std::to_string(line_number) + ": " + why);
  };
  auto next = [&](std::string_view key) {
    while (std::getline(in, line)) {
      ++line_number;
      if (!Trim(line).empty()) break;
      line.clear();
    }
    auto tokens = SplitWhitespace(line);
    if (tokens.empty() || tokens[0] != key) fail("expected '" + std::string(key) + "'");
    return tokens;
  };
  auto number = [&](const std::string& token) {
    const auto v = ParseDouble(token);
    if (!v) fail("bad number '" + token + "'");
    return *v;
  };
  auto count = [&](const std::string& token) {
    const auto v = ParseInt(token);
    if (!v || *v < 0) fail("bad count '" + token + "'");
    return static_cast<std::size_t>(*v);
  };

  if (!std::getline(in, line)) Fail(ErrorKind::kData, "model file is empty");
  ++line_number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kModelFileHeader) fail("unsupported model format '" + line + "'");

  RiskModelParams model;
  auto tokens = next("theta");
  if (tokens.size() != 2) fail("malformed theta");
  model.theta = number(tokens[1]);

  tokens = next("rules_fingerprint");
  if (tokens.size() != 2) fail("malformed fingerprint");
  try {
    model.rules_fingerprint = std::stoull(tokens[1]);
  } catch (const std::exception&) {
    fail("bad fingerprint");
  }
  if (expected_rules_fingerprint && *expected_rules_fingerprint != model.rules_fingerprint) {
    Fail(ErrorKind::kData, "model/rule version mismatch: the model was trained on another rule file");
  }

  tokens = next("bins");
  if (tokens.size() < 2) fail("malformed bins");
  const std::size_t bins = count(tokens[1]);
  if (tokens.size() != bins + 3) fail("expected " + std::to_string(bins + 1) + " bin edges");

  tokens = next("features");
  if (tokens.size() != 2) fail("malformed feature count");
  const std::size_t features = count(tokens[1]);
  for (std::size_t k = 0; k < features; ++k) {
    tokens = next("feature");
    if (tokens.size() != 5 || count(tokens[1]) != k) fail("malformed feature line");
    model.rule_weight.push_back(number(tokens[2]));
    model.rule_mu.push_back(number(tokens[3]));
    model.rule_rsd.push_back(number(tokens[4]));
  }
  tokens = next("alpha");
  if (tokens.size() != 2) fail("malformed alpha");
  model.alpha = number(tokens[1]);
  tokens = next("beta");
  if (tokens.size() != 2) fail("malformed beta");
  model.beta = number(tokens[1]);
  tokens = next("bin_rsd");
  if (tokens.size() != bins + 1) fail("expected " + std::to_string(bins) + " bin RSDs");
  for (std::size_t b = 0; b < bins; ++b) model.bin_rsd.push_back(number(tokens[b + 1]));
  model.Validate();
  return model;
}

}  // namespace learnrisk
