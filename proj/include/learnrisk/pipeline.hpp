#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "learnrisk/data_model.hpp"
#include "learnrisk/evaluation.hpp"
#include "learnrisk/feature_gen.hpp"
#include "learnrisk/metrics.hpp"
#include "learnrisk/reference_scorer.hpp"
#include "learnrisk/risk_model.hpp"
#include "learnrisk/synth.hpp"
#include "learnrisk/training.hpp"

namespace learnrisk {

struct PipelineConfig {
  std::filesystem::path base_dir;  // relative paths resolve here
  std::vector<std::filesystem::path> record_files;
  std::filesystem::path pair_file;
  std::optional<std::filesystem::path> ensemble_file;
  char delimiter = ',';
  std::string id_column = "id";
  Schema schema;
  std::vector<MetricDescriptor> metrics;
  std::array<unsigned, 3> split_ratio{3, 2, 5};
  std::uint64_t seed = 1;
  ForestConfig forest;
  TrainConfig train;
  std::size_t bins = 10;
  double theta = 0.9;
  bool reference_classifier = false;  // refit probabilities with the built-in scorer
  ReferenceConfig classifier;
  std::size_t ensemble_members = 0;  // bootstrap members for the uncertainty baseline
  std::size_t trust_k = 5;
  std::filesystem::path output_dir = "out";

  // Fully resolved settings in config-file syntax.
  std::string Echo() const;
  void SetSeed(std::uint64_t value);
};

PipelineConfig ParseConfig(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig LoadConfig(const std::filesystem::path& path);

struct MethodAuroc {
  std::string method;
  double auroc = 0.5;
  std::size_t pairs = 0;
  std::size_t mislabeled = 0;
};

// One pipeline run over a config. Data are loaded on first use; every stage
// writes its artifacts under the output directory.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const Workload& split(WorkloadRole role);
  const MetricMatrix& matrix(WorkloadRole role);

  std::vector<RiskRule> GenFeatures();
  TrainResult TrainRisk();
  std::vector<RiskScore> Score();
  std::vector<MethodAuroc> Evaluate(const std::vector<std::filesystem::path>& extra_rankings = {});
  std::vector<std::string> ActiveSelect(std::size_t k,
                                        const std::optional<std::filesystem::path>& exclude_file);
  void Run();

  std::filesystem::path OutputPath(const std::string& name) const;
  std::vector<RiskRule> LoadRules();

 private:
  void Load();
  std::size_t Index(WorkloadRole role) const;
  void WriteEchoedConfig() const;

  PipelineConfig config_;
  bool loaded_ = false;
  std::array<Workload, 3> splits_;
  std::array<MetricMatrix, 3> matrices_;
};

// Writes records, pairs scored by the reference scorer, an ensemble file and
// a ready-to-run config into `dir`. Returns the generated corpus.
SynthCorpus WriteSynthCorpus(const std::filesystem::path& dir, const SynthSpec& spec,
                             std::uint64_t pipeline_seed,
                             const std::array<unsigned, 3>& ratio = {3, 2, 5});

}  // namespace learnrisk
