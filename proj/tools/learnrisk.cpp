#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "learnrisk/error.hpp"
#include "learnrisk/pipeline.hpp"

namespace fs = std::filesystem;
using namespace learnrisk;

namespace {

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kData: return 3;
    case ErrorKind::kDegenerate: return 4;
    case ErrorKind::kInvalidArgument: return 1;
  }
  return 1;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

Pipeline MakePipeline(const Options& o) {
  PipelineConfig config = LoadConfig(o.config);
  if (o.seed) config.SetSeed(*o.seed);
  if (o.out) config.output_dir = fs::absolute(*o.out);
  return Pipeline(std::move(config));
}

void PrintSummary(const std::vector<MethodAuroc>& summary) {
  for (const auto& m : summary) {
    std::printf("%-12s auroc %.4f  (%zu pairs, %zu mislabeled)\n", m.method.c_str(), m.auroc,
                m.pairs, m.mislabeled);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mislabel risk ranking for entity-resolution pairs"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "pipeline config file")->required();
    cmd->add_option("--seed", o.seed, "override the pipeline seed");
    cmd->add_option("--out", o.out, "override the output directory");
  };

  auto* gen = app.add_subcommand("gen-features", "mine one-sided risk rules");
  add_common(gen);
  auto* train = app.add_subcommand("train-risk", "fit the risk model");
  add_common(train);
  auto* score = app.add_subcommand("score", "rank test pairs by VaR risk");
  add_common(score);
  auto* evaluate = app.add_subcommand("evaluate", "ROC report per method");
  add_common(evaluate);
  std::vector<std::string> extra;
  evaluate->add_option("rankings", extra, "additional ranking files (var or score column)");
  auto* active = app.add_subcommand("active-select", "riskiest pairs for labeling");
  add_common(active);
  std::size_t k = 100;
  std::optional<std::string> exclude;
  active->add_option("-k,--count", k, "batch size");
  active->add_option("--exclude", exclude, "pairs already labeled (left_id,right_id)");
  auto* run = app.add_subcommand("run", "gen-features, train-risk, score and evaluate");
  add_common(run);

  auto* synth = app.add_subcommand("synth", "write the synthetic bibliographic corpus");
  std::string preset = "default";
  std::size_t pairs = 4000;
  std::uint64_t synth_seed = 1;
  std::string synth_out = "synth";
  synth->add_option("--preset", preset, "default, planted or noisy")
      ->check(CLI::IsMember({"default", "planted", "noisy"}));
  synth->add_option("--pairs", pairs, "pair count for the default preset");
  synth->add_option("--seed", synth_seed, "generator and pipeline seed");
  synth->add_option("--out", synth_out, "output directory");
  std::optional<double> noise;
  std::optional<double> clean_fraction;
  synth->add_option("--noise", noise, "per-token corruption rate of noisy copies");
  synth->add_option("--clean-fraction", clean_fraction, "share of matches copied without noise");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      SynthSpec spec;
      std::array<unsigned, 3> ratio{3, 2, 5};
      if (preset == "default") {
        spec = SynthSpec::Default(pairs, synth_seed);
      } else if (preset == "planted") {
        spec = SynthSpec::Planted(synth_seed);
        ratio = {1, 0, 0};
      } else {
        spec = SynthSpec::Noisy(pairs / 2, synth_seed);
        ratio = {1, 0, 0};
      }
      if (noise) spec.noise = *noise;
      if (clean_fraction) spec.clean_match_fraction = *clean_fraction;
      const auto corpus = WriteSynthCorpus(synth_out, spec, synth_seed, ratio);
      std::printf("wrote %zu pairs to %s\n", corpus.workload.size(), synth_out.c_str());
      return 0;
    }
    Pipeline pipeline = MakePipeline(o);
    if (gen->parsed()) {
      const auto rules = pipeline.GenFeatures();
      std::printf("%zu rules -> %s\n", rules.size(), pipeline.OutputPath("rules.txt").c_str());
    } else if (train->parsed()) {
      const auto result = pipeline.TrainRisk();
      if (!result.loss_trace.empty()) {
        std::printf("loss %.6g -> %.6g over %zu epochs\n", result.loss_trace.front(),
                    result.loss_trace.back(), result.loss_trace.size());
      }
      std::printf("model -> %s\n", pipeline.OutputPath("model.txt").c_str());
    } else if (score->parsed()) {
      const auto ranking = pipeline.Score();
      std::printf("%zu pairs ranked -> %s\n", ranking.size(), pipeline.OutputPath("ranking.csv").c_str());
    } else if (evaluate->parsed()) {
      std::vector<fs::path> paths(extra.begin(), extra.end());
      PrintSummary(pipeline.Evaluate(paths));
    } else if (active->parsed()) {
      std::optional<fs::path> exclude_path;
      if (exclude) exclude_path = *exclude;
      const auto batch = pipeline.ActiveSelect(k, exclude_path);
      std::printf("%zu pairs -> %s\n", batch.size(), pipeline.OutputPath("active_batch.csv").c_str());
    } else if (run->parsed()) {
      pipeline.GenFeatures();
      pipeline.TrainRisk();
      pipeline.Score();
      PrintSummary(pipeline.Evaluate());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
