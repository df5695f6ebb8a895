#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "learnrisk/data_model.hpp"
#include "learnrisk/metrics.hpp"

namespace learnrisk {

// Synthetic bibliographic corpus: title (text), authors (entity-set),
// venue (entity-name), year (number). Every pair gets its own two records.
enum class SynthKind : std::uint8_t {
  kMatch,              // noisy copy, same year
  kMatchYearTypo,      // noisy copy whose year is off by one
  kNonMatch,           // unrelated publication, different year
  kNonMatchSameYear,   // unrelated publication, same year
  kEditionTrap,        // clean copy with a shifted year: a different edition
  kTwinEquivalent,     // content-identical twins with opposite ground truth
  kTwinInequivalent,
};
std::string_view ToString(SynthKind kind);

struct SynthSpec {
  std::size_t matches = 0;
  std::size_t match_year_typos = 0;
  std::size_t non_matches = 0;
  std::size_t non_matches_same_year = 0;
  std::size_t edition_traps = 0;
  std::size_t twin_pairs = 0;  // each yields one equivalent and one inequivalent pair
  double noise = 0.0;  // chance that a noisy copy gets a second corruption
  double clean_match_fraction = 0.75;  // matches that are exact copies
  std::uint64_t seed = 1;

  std::size_t total() const;

  // 65% matches, 25% non-matches, 10% edition traps.
  static SynthSpec Default(std::size_t pairs, std::uint64_t seed);
  // 2000 pairs; "year differs" covers 300 pairs, 294 of them inequivalent.
  static SynthSpec Planted(std::uint64_t seed);
  // Every metric row occurs once per class, so no leaf is pure.
  static SynthSpec Noisy(std::size_t twins, std::uint64_t seed);
};

struct SynthCorpus {
  Workload workload;  // classifier_prob is 0.5 until a scorer fills it
  std::vector<SynthKind> kinds;
};

Schema SynthSchema();
SynthCorpus GenerateCorpus(const SynthSpec& spec);

// Nineteen metrics over the four attributes.
std::vector<MetricDescriptor> SynthMetrics(const Schema& schema);
// Title similarities: what the reference scorer sees.
std::vector<std::string> SynthClassifierColumns();

}  // namespace learnrisk
