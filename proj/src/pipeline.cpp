#include "learnrisk/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "learnrisk/error.hpp"
#include "learnrisk/random.hpp"
#include "learnrisk/text_io.hpp"

namespace learnrisk {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data", {"records", "pairs", "ensemble", "delimiter", "id_column"}},
      {"split", {"ratio"}},
      {"pipeline", {"seed"}},
      {"forest", {"lambda", "tau", "max_depth", "min_leaf", "match_class_weight", "max_trees"}},
      {"risk", {"theta", "bins"}},
      {"train", {"learning_rate", "epochs", "l1", "l2", "batch"}},
      {"classifier", {"source", "columns", "learning_rate", "epochs", "l2", "ensemble_members"}},
      {"trustscore", {"k"}},
      {"output", {"dir"}},
  };
  return keys;
}

double GetDouble(const pt::ptree& section, const std::string& where, const std::string& key,
                 double fallback) {
  const auto value = section.get_optional<std::string>(key);
  if (!value) return fallback;
  const auto parsed = ParseDouble(Trim(*value));
  if (!parsed || !std::isfinite(*parsed)) {
    Fail(ErrorKind::kConfig, where + "." + key + ": '" + *value + "' is not a number");
  }
  return *parsed;
}

std::int64_t GetInt(const pt::ptree& section, const std::string& where, const std::string& key,
                    std::int64_t fallback) {
  const auto value = section.get_optional<std::string>(key);
  if (!value) return fallback;
  const auto parsed = ParseInt(Trim(*value));
  if (!parsed || *parsed < 0) {
    Fail(ErrorKind::kConfig, where + "." + key + ": '" + *value + "' is not a non-negative integer");
  }
  return *parsed;
}

char ParseDelimiter(const std::string& text) {
  if (text == "tab" || text == "\\t") return '\t';
  if (text == "comma" || text == ",") return ',';
  if (text.size() == 1) return text[0];
  Fail(ErrorKind::kConfig, "data.delimiter: expected one character, 'comma' or 'tab'");
}

std::string DelimiterName(char c) {
  if (c == '\t') return "tab";
  if (c == ',') return "comma";
  return std::string(1, c);
}

std::array<unsigned, 3> ParseRatio(const std::string& text) {
  std::array<unsigned, 3> ratio{};
  std::stringstream in(text);
  std::string part;
  std::size_t n = 0;
  while (std::getline(in, part, ':')) {
    const auto v = ParseInt(Trim(part));
    if (n >= 3 || !v || *v < 0) Fail(ErrorKind::kConfig, "split.ratio: expected a:b:c");
    ratio[n++] = static_cast<unsigned>(*v);
  }
  if (n != 3) Fail(ErrorKind::kConfig, "split.ratio: expected a:b:c");
  if (ratio[0] + ratio[1] + ratio[2] == 0) Fail(ErrorKind::kConfig, "split.ratio: all parts zero");
  return ratio;
}

// "name" or "name:key=value:key=value"
MetricDescriptor ParseMetricToken(const Schema& schema, const std::string& attribute,
                                  const std::string& token) {
  std::stringstream in(token);
  std::string name;
  std::getline(in, name, ':');
  std::map<std::string, std::string> params;
  std::string param;
  while (std::getline(in, param, ':')) {
    const auto eq = param.find('=');
    if (eq == std::string::npos || eq == 0) {
      Fail(ErrorKind::kConfig, "metrics." + attribute + ": bad parameter '" + param + "'");
    }
    params[param.substr(0, eq)] = param.substr(eq + 1);
  }
  try {
    return MakeDescriptor(schema, attribute, name, params);
  } catch (const Error& e) {
    Fail(ErrorKind::kConfig, "metrics." + attribute + ": " + e.what());
  }
}

std::string MetricToken(const MetricDescriptor& d) {
  std::string out = d.name;
  for (const auto& [k, v] : d.params) out += ":" + k + "=" + v;
  return out;
}

std::vector<std::uint8_t> TruthFlags(const Workload& w, const std::string& what) {
  std::vector<std::uint8_t> flags(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w.pairs[i].ground_truth) {
      Fail(ErrorKind::kData, what + " pair (" + w.pairs[i].left_id + ", " + w.pairs[i].right_id +
                                 ") lacks ground truth");
    }
    flags[i] = *w.pairs[i].ground_truth == Truth::kEquivalent;
  }
  return flags;
}

// Scores keyed by "left|right" from a ranking file with a var or score column.
std::unordered_map<std::string, double> ReadRankingScores(const fs::path& path) {
  if (!fs::exists(path)) Fail(ErrorKind::kData, "ranking file " + path.string() + " not found");
  const auto table = ReadDelimited(path, ',');
  const auto left = table.Column("left_id");
  const auto right = table.Column("right_id");
  auto score = table.Column("var");
  if (!score) score = table.Column("score");
  if (!left || !right || !score) {
    Fail(ErrorKind::kData, path.string() + ": needs left_id, right_id and a var or score column");
  }
  std::unordered_map<std::string, double> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto v = ParseDouble(row[*score]);
    if (!v || std::isnan(*v)) {
      Fail(ErrorKind::kData, path.string() + ":" + std::to_string(table.line_numbers[r]) +
                                 ": bad score '" + row[*score] + "'");
    }
    out[row[*left] + "|" + row[*right]] = *v;
  }
  return out;
}

}  // namespace

void PipelineConfig::SetSeed(std::uint64_t value) {
  seed = value;
  train.seed = SubSeed(value, 1);
  classifier.seed = SubSeed(value, 2);
}

PipelineConfig ParseConfig(const std::string& text, const fs::path& base_dir) {
  // Allow '#' comments, whole-line or after whitespace, alongside the ';'
  // comments the INI reader understands.
  std::stringstream cleaned;
  {
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
          line.resize(i);
          break;
        }
      }
      cleaned << line << '\n';
    }
  }
  pt::ptree tree;
  try {
    pt::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorKind::kConfig, std::string("config: ") + e.what());
  }

  for (const auto& [section, body] : tree) {
    if (section == "schema" || section == "metrics") continue;
    const auto known = KnownKeys().find(section);
    if (known == KnownKeys().end()) Fail(ErrorKind::kConfig, "unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!known->second.contains(key)) {
        Fail(ErrorKind::kConfig, "unknown config key " + section + "." + key);
      }
    }
  }

  PipelineConfig c;
  c.base_dir = base_dir;
  const pt::ptree empty;
  auto section = [&](const std::string& name) -> const pt::ptree& {
    const auto child = tree.get_child_optional(name);
    return child ? *child : empty;
  };

  const auto& data = section("data");
  for (const auto& f : SplitWhitespace(data.get<std::string>("records", ""))) c.record_files.push_back(f);
  if (c.record_files.empty() || c.record_files.size() > 2) {
    Fail(ErrorKind::kConfig, "data.records: list one or two record files");
  }
  c.pair_file = Trim(data.get<std::string>("pairs", ""));
  if (c.pair_file.empty()) Fail(ErrorKind::kConfig, "data.pairs is required");
  if (const auto e = data.get_optional<std::string>("ensemble"); e && !Trim(*e).empty()) {
    c.ensemble_file = Trim(*e);
  }
  c.delimiter = ParseDelimiter(Trim(data.get<std::string>("delimiter", ",")));
  c.id_column = Trim(data.get<std::string>("id_column", "id"));

  std::vector<Attribute> attributes;
  for (const auto& [name, value] : section("schema")) {
    const auto kind = ParseValueKind(Trim(value.data()));
    if (!kind) Fail(ErrorKind::kConfig, "schema." + name + ": unknown kind '" + value.data() + "'");
    attributes.push_back({name, *kind});
  }
  if (attributes.empty()) Fail(ErrorKind::kConfig, "[schema] must list at least one attribute");
  try {
    c.schema = Schema(std::move(attributes));
  } catch (const Error& e) {
    Fail(ErrorKind::kConfig, e.what());
  }
  for (const auto& [attribute, value] : section("metrics")) {
    for (const auto& token : SplitWhitespace(value.data())) {
      c.metrics.push_back(ParseMetricToken(c.schema, attribute, token));
    }
  }
  if (c.metrics.empty()) Fail(ErrorKind::kConfig, "[metrics] must list at least one metric");

  c.split_ratio = ParseRatio(section("split").get<std::string>("ratio", "3:2:5"));
  c.SetSeed(static_cast<std::uint64_t>(GetInt(section("pipeline"), "pipeline", "seed", 1)));

  const auto& forest = section("forest");
  c.forest.lambda = GetDouble(forest, "forest", "lambda", c.forest.lambda);
  c.forest.tau = GetDouble(forest, "forest", "tau", c.forest.tau);
  c.forest.max_depth = static_cast<int>(GetInt(forest, "forest", "max_depth", c.forest.max_depth));
  c.forest.min_leaf = static_cast<std::size_t>(GetInt(forest, "forest", "min_leaf", c.forest.min_leaf));
  c.forest.match_class_weight =
      GetDouble(forest, "forest", "match_class_weight", c.forest.match_class_weight);
  c.forest.max_trees = static_cast<std::size_t>(GetInt(forest, "forest", "max_trees", c.forest.max_trees));
  c.forest.Validate();

  const auto& risk = section("risk");
  c.theta = GetDouble(risk, "risk", "theta", c.theta);
  c.bins = static_cast<std::size_t>(GetInt(risk, "risk", "bins", c.bins));
  if (!(c.theta > 0.5 && c.theta < 1.0)) Fail(ErrorKind::kConfig, "risk.theta must lie in (0.5,1)");
  if (c.bins == 0) Fail(ErrorKind::kConfig, "risk.bins must be positive");

  const auto& train = section("train");
  c.train.learning_rate = GetDouble(train, "train", "learning_rate", c.train.learning_rate);
  c.train.epochs = static_cast<int>(GetInt(train, "train", "epochs", c.train.epochs));
  c.train.l1 = GetDouble(train, "train", "l1", c.train.l1);
  c.train.l2 = GetDouble(train, "train", "l2", c.train.l2);
  c.train.batch = static_cast<std::size_t>(GetInt(train, "train", "batch", c.train.batch));
  c.train.Validate();

  const auto& classifier = section("classifier");
  const std::string source = Trim(classifier.get<std::string>("source", "file"));
  if (source != "file" && source != "reference") {
    Fail(ErrorKind::kConfig, "classifier.source must be 'file' or 'reference'");
  }
  c.reference_classifier = source == "reference";
  c.classifier.columns = SplitWhitespace(classifier.get<std::string>("columns", ""));
  c.classifier.learning_rate =
      GetDouble(classifier, "classifier", "learning_rate", c.classifier.learning_rate);
  c.classifier.epochs = static_cast<int>(GetInt(classifier, "classifier", "epochs", c.classifier.epochs));
  c.classifier.l2 = GetDouble(classifier, "classifier", "l2", c.classifier.l2);
  c.ensemble_members =
      static_cast<std::size_t>(GetInt(classifier, "classifier", "ensemble_members", 0));
  c.classifier.Validate();
  for (const auto& label : c.classifier.columns) {
    const bool found = std::any_of(c.metrics.begin(), c.metrics.end(),
                                   [&](const MetricDescriptor& d) { return d.Label() == label; });
    if (!found) Fail(ErrorKind::kConfig, "classifier.columns: no metric " + label);
  }

  c.trust_k = static_cast<std::size_t>(GetInt(section("trustscore"), "trustscore", "k", c.trust_k));
  if (c.trust_k == 0) Fail(ErrorKind::kConfig, "trustscore.k must be positive");
  c.output_dir = Trim(section("output").get<std::string>("dir", "out"));

  for (const auto& f : c.record_files) {
    if (!fs::exists(base_dir / f)) Fail(ErrorKind::kConfig, "record file " + (base_dir / f).string() + " not found");
  }
  if (!fs::exists(base_dir / c.pair_file)) {
    Fail(ErrorKind::kConfig, "pair file " + (base_dir / c.pair_file).string() + " not found");
  }
  if (c.ensemble_file && !fs::exists(base_dir / *c.ensemble_file)) {
    Fail(ErrorKind::kConfig, "ensemble file " + (base_dir / *c.ensemble_file).string() + " not found");
  }
  return c;
}

PipelineConfig LoadConfig(const fs::path& path) {
  if (!fs::exists(path)) Fail(ErrorKind::kConfig, "config file " + path.string() + " not found");
  return ParseConfig(ReadTextFile(path), path.parent_path());
}

std::string PipelineConfig::Echo() const {
  std::ostringstream out;
  out << "[data]\nrecords =";
  for (const auto& f : record_files) out << ' ' << f.generic_string();
  out << "\npairs = " << pair_file.generic_string() << '\n';
  if (ensemble_file) out << "ensemble = " << ensemble_file->generic_string() << '\n';
  out << "delimiter = " << DelimiterName(delimiter) << '\n';
  out << "id_column = " << id_column << "\n\n";
  out << "[schema]\n";
  for (const auto& a : schema.attributes()) out << a.name << " = " << ToString(a.kind) << '\n';
  out << "\n[metrics]\n";
  for (const auto& a : schema.attributes()) {
    std::string tokens;
    for (const auto& d : metrics) {
      if (d.attribute == a.name) tokens += (tokens.empty() ? "" : " ") + MetricToken(d);
    }
    if (!tokens.empty()) out << a.name << " = " << tokens << '\n';
  }
  out << "\n[split]\nratio = " << split_ratio[0] << ':' << split_ratio[1] << ':' << split_ratio[2]
      << "\n\n[pipeline]\nseed = " << seed << "\n\n";
  out << "[forest]\nlambda = " << FormatDouble(forest.lambda)
      << "\ntau = " << FormatDouble(forest.tau) << "\nmax_depth = " << forest.max_depth
      << "\nmin_leaf = " << forest.min_leaf
      << "\nmatch_class_weight = " << FormatDouble(forest.match_class_weight)
      << "\nmax_trees = " << forest.max_trees << "\n\n";
  out << "[risk]\ntheta = " << FormatDouble(theta) << "\nbins = " << bins << "\n\n";
  out << "[train]\nlearning_rate = " << FormatDouble(train.learning_rate)
      << "\nepochs = " << train.epochs << "\nl1 = " << FormatDouble(train.l1)
      << "\nl2 = " << FormatDouble(train.l2) << "\nbatch = " << train.batch << "\n\n";
  out << "[classifier]\nsource = " << (reference_classifier ? "reference" : "file") << '\n';
  if (!classifier.columns.empty()) {
    out << "columns =";
    for (const auto& col : classifier.columns) out << ' ' << col;
    out << '\n';
  }
  out << "learning_rate = " << FormatDouble(classifier.learning_rate)
      << "\nepochs = " << classifier.epochs << "\nl2 = " << FormatDouble(classifier.l2)
      << "\nensemble_members = " << ensemble_members << "\n\n";
  out << "[trustscore]\nk = " << trust_k << "\n\n";
  out << "[output]\ndir = " << output_dir.generic_string() << '\n';
  return out.str();
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {}

fs::path Pipeline::OutputPath(const std::string& name) const {
  const fs::path dir = config_.output_dir.is_absolute() ? config_.output_dir
                                                        : config_.base_dir / config_.output_dir;
  return dir / name;
}

void Pipeline::WriteEchoedConfig() const {
  WriteTextFile(OutputPath("effective_config.ini"), config_.Echo());
}

std::size_t Pipeline::Index(WorkloadRole role) const {
  switch (role) {
    case WorkloadRole::kClassifierTrain: return 0;
    case WorkloadRole::kRiskTrain: return 1;
    case WorkloadRole::kTest: return 2;
    case WorkloadRole::kUnsplit: break;
  }
  Fail(ErrorKind::kInvalidArgument, "pipeline splits have a train, risk-train or test role");
}

void Pipeline::Load() {
  if (loaded_) return;
  LoadOptions options;
  for (const auto& f : config_.record_files) options.record_files.push_back(config_.base_dir / f);
  options.pair_file = config_.base_dir / config_.pair_file;
  options.schema = config_.schema;
  options.delimiter = config_.delimiter;
  options.id_column = config_.id_column;
  const Workload all = LoadWorkload(options);
  splits_ = SplitWorkload(all, config_.split_ratio, config_.seed);
  const MetricContext context(*all.store, config_.metrics);
  for (std::size_t s = 0; s < 3; ++s) {
    matrices_[s] = BuildMetricMatrix(splits_[s], config_.metrics, context);
  }
  if (config_.reference_classifier) {
    const LinearScorer scorer = FitReference(splits_[0], matrices_[0], config_.classifier);
    for (std::size_t s = 0; s < 3; ++s) {
      const auto probs = ScoreReference(scorer, matrices_[s]);
      const WorkloadRole role = splits_[s].role;
      splits_[s] = WithClassifierProbs(splits_[s], probs);
      splits_[s].role = role;
    }
  }
  loaded_ = true;
}

const Workload& Pipeline::split(WorkloadRole role) {
  Load();
  return splits_[Index(role)];
}

const MetricMatrix& Pipeline::matrix(WorkloadRole role) {
  Load();
  return matrices_[Index(role)];
}

std::vector<RiskRule> Pipeline::GenFeatures() {
  const Workload& train = split(WorkloadRole::kClassifierTrain);
  if (train.size() == 0) Fail(ErrorKind::kDegenerate, "the classifier-train split is empty");
  const auto rules = GenerateRiskFeatures(train, matrix(WorkloadRole::kClassifierTrain), config_.forest);
  WriteTextFile(OutputPath("rules.txt"), SerializeRules(rules, config_.metrics));
  std::ostringstream table;
  WriteRow(table, {"rule_id", "consequent", "purity", "support", "equivalent", "mu"});
  for (std::size_t k = 0; k < rules.size(); ++k) {
    WriteRow(table, {std::to_string(k), std::string(ToString(rules[k].consequent)),
                     FormatDouble(rules[k].purity), std::to_string(rules[k].support),
                     std::to_string(rules[k].equivalent_count), FormatDouble(rules[k].expectation_mu)});
  }
  WriteTextFile(OutputPath("expectations.csv"), table.str());
  WriteEchoedConfig();
  return rules;
}

std::vector<RiskRule> Pipeline::LoadRules() {
  const fs::path path = OutputPath("rules.txt");
  if (!fs::exists(path)) Fail(ErrorKind::kData, "rule file " + path.string() + " not found; run gen-features");
  return ParseRules(ReadTextFile(path), config_.metrics);
}

TrainResult Pipeline::TrainRisk() {
  const auto rules = LoadRules();
  const Workload& risk = split(WorkloadRole::kRiskTrain);
  const auto features = FeaturizeWorkload(risk, matrix(WorkloadRole::kRiskTrain), rules);
  const RiskTrainSet set = MakeRiskTrainSet(risk, features);
  RiskModelParams initial = RiskModelParams::Initial(rules, config_.bins, config_.theta);
  initial.rules_fingerprint = Fingerprint(ReadTextFile(OutputPath("rules.txt")));
  TrainResult result = Train(initial, set, config_.train);
  WriteTextFile(OutputPath("model.txt"), SerializeModel(result.model));
  std::ostringstream trace;
  WriteRow(trace, {"epoch", "loss"});
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    WriteRow(trace, {std::to_string(e), FormatDouble(result.loss_trace[e])});
  }
  WriteTextFile(OutputPath("loss_trace.csv"), trace.str());
  WriteEchoedConfig();
  return result;
}

std::vector<RiskScore> Pipeline::Score() {
  const auto rules = LoadRules();
  const fs::path model_path = OutputPath("model.txt");
  if (!fs::exists(model_path)) Fail(ErrorKind::kData, "model file " + model_path.string() + " not found; run train-risk");
  const RiskModelParams model =
      ParseModel(ReadTextFile(model_path), Fingerprint(ReadTextFile(OutputPath("rules.txt"))));
  if (model.rule_count() != rules.size()) {
    Fail(ErrorKind::kData, "model/rule version mismatch: rule counts differ");
  }
  const Workload& test = split(WorkloadRole::kTest);
  const auto features = FeaturizeWorkload(test, matrix(WorkloadRole::kTest), rules);
  auto ranking = ScoreWorkload(test, features, model);
  WriteTextFile(OutputPath("ranking.csv"), SerializeRanking(test, features, ranking));
  WriteEchoedConfig();
  return ranking;
}

std::vector<MethodAuroc> Pipeline::Evaluate(const std::vector<fs::path>& extra_rankings) {
  const Workload& test = split(WorkloadRole::kTest);
  std::vector<std::uint8_t> mislabeled(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& risk = test.pairs[i].risk_label;
    if (!risk) Fail(ErrorKind::kData, "evaluation needs ground truth on every test pair");
    mislabeled[i] = static_cast<std::uint8_t>(*risk);
  }

  std::vector<std::pair<std::string, std::vector<double>>> methods;
  auto from_ranking = [&](const std::string& name, const fs::path& path) {
    const auto scores = ReadRankingScores(path);
    std::vector<double> aligned(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto it = scores.find(test.pairs[i].Key());
      if (it == scores.end()) {
        Fail(ErrorKind::kData, path.string() + " has no score for pair (" + test.pairs[i].left_id +
                                   ", " + test.pairs[i].right_id + ")");
      }
      aligned[i] = it->second;
    }
    methods.emplace_back(name, std::move(aligned));
  };
  from_ranking("learnrisk", OutputPath("ranking.csv"));

  std::vector<double> ambiguity(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) ambiguity[i] = AmbiguityScore(test.pairs[i].classifier_prob);
  methods.emplace_back("ambiguity", std::move(ambiguity));

  {
    const Workload& train = split(WorkloadRole::kClassifierTrain);
    const MetricMatrix& train_matrix = matrix(WorkloadRole::kClassifierTrain);
    const FeatureScaler scaler = FeatureScaler::Fit(train_matrix);
    const ClusterModel clusters =
        FitClusters(scaler.TransformAll(train_matrix), TruthFlags(train, "classifier-train"),
                    config_.trust_k, SubSeed(config_.seed, 3));
    std::vector<double> trust(test.size());
    const MetricMatrix& test_matrix = matrix(WorkloadRole::kTest);
    for (std::size_t i = 0; i < test.size(); ++i) {
      trust[i] = TrustRisk(scaler.Transform(test_matrix, i),
                           test.pairs[i].machine_label == MachineLabel::kMatching, clusters);
    }
    methods.emplace_back("trustscore", std::move(trust));
  }

  std::vector<std::vector<double>> ensemble;
  if (config_.ensemble_file) {
    const fs::path path = config_.base_dir / *config_.ensemble_file;
    const auto table = ReadDelimited(path, ',');
    const auto left = table.Column("left_id");
    const auto right = table.Column("right_id");
    if (!left || !right) Fail(ErrorKind::kData, path.string() + ": needs left_id and right_id");
    std::unordered_map<std::string, std::vector<double>> by_key;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      std::vector<double> probs;
      for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == *left || c == *right) continue;
        const auto v = ParseDouble(table.rows[r][c]);
        if (!v || !(*v >= 0.0 && *v <= 1.0)) {
          Fail(ErrorKind::kData, path.string() + ":" + std::to_string(table.line_numbers[r]) +
                                     ": bad probability '" + table.rows[r][c] + "'");
        }
        probs.push_back(*v);
      }
      by_key[table.rows[r][*left] + "|" + table.rows[r][*right]] = std::move(probs);
    }
    for (const auto& pair : test.pairs) {
      const auto it = by_key.find(pair.Key());
      if (it == by_key.end() || it->second.empty()) {
        Fail(ErrorKind::kData, path.string() + " lacks pair (" + pair.left_id + ", " + pair.right_id + ")");
      }
      ensemble.push_back(it->second);
    }
  } else if (config_.ensemble_members > 0) {
    ReferenceConfig rc = config_.classifier;
    rc.seed = SubSeed(config_.seed, 4);
    ensemble = BootstrapEnsemble(matrix(WorkloadRole::kClassifierTrain),
                                 TruthFlags(split(WorkloadRole::kClassifierTrain), "classifier-train"),
                                 matrix(WorkloadRole::kTest), config_.ensemble_members, rc);
  }
  if (!ensemble.empty()) {
    std::vector<double> uncertainty(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (ensemble[i].empty()) Fail(ErrorKind::kDegenerate, "every bootstrap member was single-class");
      uncertainty[i] = UncertaintyScore(ensemble[i]);
    }
    methods.emplace_back("uncertainty", std::move(uncertainty));
  }
  for (const auto& path : extra_rankings) from_ranking(path.stem().string(), path);

  std::vector<MethodAuroc> summary;
  std::ostringstream table;
  WriteRow(table, {"method", "auroc", "pairs", "mislabeled"});
  std::size_t positives = 0;
  for (auto m : mislabeled) positives += m;
  for (const auto& [name, scores] : methods) {
    const RocCurve curve = RocAuroc(scores, mislabeled);
    WriteTextFile(OutputPath("roc_" + name + ".csv"), SerializeRoc(curve));
    summary.push_back({name, curve.auroc, test.size(), positives});
    WriteRow(table, {name, FormatDouble(curve.auroc), std::to_string(test.size()), std::to_string(positives)});
  }
  WriteTextFile(OutputPath("auroc.csv"), table.str());
  WriteEchoedConfig();
  return summary;
}

std::vector<std::string> Pipeline::ActiveSelect(std::size_t k,
                                                const std::optional<fs::path>& exclude_file) {
  const auto scores = ReadRankingScores(OutputPath("ranking.csv"));
  std::vector<ScoredId> ranking;
  ranking.reserve(scores.size());
  for (const auto& [key, score] : scores) ranking.push_back({key, score});
  std::unordered_set<std::string> exclude;
  if (exclude_file) {
    const auto table = ReadDelimited(*exclude_file, ',');
    const auto left = table.Column("left_id");
    const auto right = table.Column("right_id");
    if (!left || !right) Fail(ErrorKind::kData, exclude_file->string() + ": needs left_id and right_id");
    for (const auto& row : table.rows) exclude.insert(row[*left] + "|" + row[*right]);
  }
  const auto batch = SelectActiveBatch(std::move(ranking), k, exclude);
  std::ostringstream out;
  WriteRow(out, {"left_id", "right_id", "var"});
  for (const auto& key : batch) {
    const auto bar = key.find('|');
    WriteRow(out, {key.substr(0, bar), key.substr(bar + 1), FormatDouble(scores.at(key))});
  }
  WriteTextFile(OutputPath("active_batch.csv"), out.str());
  return batch;
}

void Pipeline::Run() {
  GenFeatures();
  TrainRisk();
  Score();
  Evaluate();
}

SynthCorpus WriteSynthCorpus(const fs::path& dir, const SynthSpec& spec,
                             std::uint64_t pipeline_seed, const std::array<unsigned, 3>& ratio) {
  SynthCorpus corpus = GenerateCorpus(spec);
  const Workload& all = corpus.workload;

  PipelineConfig c;
  c.base_dir = dir;
  c.record_files = {"records_left.csv", "records_right.csv"};
  c.pair_file = "pairs.csv";
  c.ensemble_file = "ensemble.csv";
  c.schema = SynthSchema();
  c.metrics = SynthMetrics(c.schema);
  c.SetSeed(pipeline_seed);
  c.split_ratio = ratio;
  c.classifier.columns = SynthClassifierColumns();
  c.classifier.seed = SubSeed(pipeline_seed, 2);

  // The reference scorer learns from the classifier-train split only.
  const MetricContext context(*all.store, c.metrics);
  const MetricMatrix full = BuildMetricMatrix(all, c.metrics, context);
  const auto parts = SplitWorkload(all, c.split_ratio, c.seed);
  const MetricMatrix train_matrix = BuildMetricMatrix(parts[0], c.metrics, context);
  const auto train_truth = TruthFlags(parts[0], "classifier-train");
  const LinearScorer scorer = FitReference(train_matrix, train_truth, c.classifier);
  corpus.workload = WithClassifierProbs(all, ScoreReference(scorer, full));

  ReferenceConfig bootstrap = c.classifier;
  bootstrap.seed = SubSeed(pipeline_seed, 4);
  const auto ensemble = BootstrapEnsemble(train_matrix, train_truth, full, 10, bootstrap);

  WriteTextFile(dir / "records_left.csv", SerializeRecords(all.store->left(), all.schema()));
  WriteTextFile(dir / "records_right.csv", SerializeRecords(all.store->right(), all.schema()));
  WriteTextFile(dir / "pairs.csv", SerializePairs(corpus.workload));
  std::ostringstream ens;
  std::vector<std::string> header{"left_id", "right_id"};
  const std::size_t members = ensemble.empty() ? 0 : ensemble[0].size();
  for (std::size_t m = 0; m < members; ++m) header.push_back("member_" + std::to_string(m));
  WriteRow(ens, header);
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::vector<std::string> row{all.pairs[i].left_id, all.pairs[i].right_id};
    for (double p : ensemble[i]) row.push_back(FormatDouble(p));
    WriteRow(ens, row);
  }
  WriteTextFile(dir / "ensemble.csv", ens.str());
  std::ostringstream kinds;
  WriteRow(kinds, {"left_id", "right_id", "kind"});
  for (std::size_t i = 0; i < all.size(); ++i) {
    WriteRow(kinds, {all.pairs[i].left_id, all.pairs[i].right_id, std::string(ToString(corpus.kinds[i]))});
  }
  WriteTextFile(dir / "pair_kinds.csv", kinds.str());
  WriteTextFile(dir / "learnrisk.ini", c.Echo());
  return corpus;
}

}  // namespace learnrisk
