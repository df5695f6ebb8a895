#include "learnrisk/synth.hpp"

#include <algorithm>
#include <array>
#include <span>

#include "learnrisk/error.hpp"
#include "learnrisk/random.hpp"

namespace learnrisk {

std::string_view ToString(SynthKind kind) {
  switch (kind) {
    case SynthKind::kMatch: return "match";
    case SynthKind::kMatchYearTypo: return "match-year-typo";
    case SynthKind::kNonMatch: return "non-match";
    case SynthKind::kNonMatchSameYear: return "non-match-same-year";
    case SynthKind::kEditionTrap: return "edition-trap";
    case SynthKind::kTwinEquivalent: return "twin-equivalent";
    case SynthKind::kTwinInequivalent: return "twin-inequivalent";
  }
  return "?";
}

std::size_t SynthSpec::total() const {
  return matches + match_year_typos + non_matches + non_matches_same_year + edition_traps +
         2 * twin_pairs;
}

SynthSpec SynthSpec::Default(std::size_t pairs, std::uint64_t seed) {
  SynthSpec s;
  s.edition_traps = pairs / 10;
  s.matches = pairs * 65 / 100;
  s.non_matches_same_year = (pairs - s.edition_traps - s.matches) / 10;
  s.non_matches = pairs - s.edition_traps - s.matches - s.non_matches_same_year;
  s.seed = seed;
  return s;
}

SynthSpec SynthSpec::Planted(std::uint64_t seed) {
  SynthSpec s;
  s.match_year_typos = 6;
  s.non_matches = 294;
  s.matches = 800;
  s.non_matches_same_year = 900;
  s.seed = seed;
  return s;
}

SynthSpec SynthSpec::Noisy(std::size_t twins, std::uint64_t seed) {
  SynthSpec s;
  s.twin_pairs = twins;
  s.seed = seed;
  return s;
}

namespace {

constexpr std::array kWords = {
    "adaptive",   "analysis",   "approach",    "approximate", "architecture", "automatic",
    "bayesian",   "benchmark",  "caching",     "clustering",  "compression",  "concurrency",
    "consistent", "constraint", "crowdsourced", "data",       "database",     "declarative",
    "deep",       "dependency", "detection",   "discovery",   "distributed",  "dynamic",
    "efficient",  "embedding",  "engine",      "entity",      "estimation",   "evaluation",
    "execution",  "explaining", "fast",        "federated",   "framework",    "fuzzy",
    "graph",      "hashing",    "heterogeneous", "hybrid",    "incremental",  "index",
    "inference",  "integration", "interactive", "join",       "knowledge",    "language",
    "large",      "latency",    "learning",    "linkage",     "logical",      "maintenance",
    "matching",   "memory",     "mining",      "model",       "network",      "neural",
    "optimization", "parallel", "partitioning", "pattern",    "planning",     "privacy",
    "probabilistic", "processing", "provenance", "quality",   "query",        "ranking",
    "record",     "recovery",   "relational",  "repair",      "resolution",   "robust",
    "sampling",   "scalable",   "schema",      "search",      "secure",       "semantic",
    "similarity", "sketch",     "spatial",     "storage",     "stream",       "structured",
    "summarization", "system",  "temporal",    "text",        "transaction",  "uncertain",
    "update",     "vector",     "view",        "workload",
};

constexpr std::array kSurnames = {
    "abadi",    "agrawal",  "bernstein", "bohannon",  "chaudhuri", "chen",     "christen",
    "dong",     "elmagarmid", "fan",     "franklin",  "garcia",    "getoor",   "gray",
    "halevy",   "hellerstein", "ives",   "jagadish",  "kossmann",  "kraska",   "li",
    "liu",      "madden",   "naumann",   "ooi",       "papotti",   "rahm",     "re",
    "sarawagi", "stonebraker", "suciu",  "tan",       "wang",      "widom",    "wu",
    "xu",       "yang",     "zhang",     "zhou",      "zhu",
};

struct Venue {
  const char* full;
  const char* abbr;
};
constexpr std::array kVenues = {
    Venue{"very large data bases", "vldb"},
    Venue{"international conference on management of data", "sigmod"},
    Venue{"international conference on data engineering", "icde"},
    Venue{"knowledge discovery and data mining", "kdd"},
    Venue{"conference on information and knowledge management", "cikm"},
    Venue{"extending database technology", "edbt"},
    Venue{"international conference on database theory", "icdt"},
    Venue{"transactions on database systems", "tods"},
    Venue{"transactions on knowledge and data engineering", "tkde"},
    Venue{"world wide web conference", "www"},
    Venue{"neural information processing systems", "nips"},
    Venue{"international conference on machine learning", "icml"},
};

struct Paper {
  std::vector<std::string> title;
  std::vector<std::string> authors;
  std::size_t venue = 0;
  bool abbreviated = false;
  int year = 2000;
};

template <typename Array>
std::string Pick(const Array& items, Rng& rng) {
  return items[UniformBelow(rng, items.size())];
}

Paper RandomPaper(Rng& rng) {
  Paper p;
  const std::size_t words = 4 + UniformBelow(rng, 5);
  for (std::size_t i = 0; i < words; ++i) p.title.push_back(Pick(kWords, rng));
  const std::size_t authors = 1 + UniformBelow(rng, 4);
  while (p.authors.size() < authors) {
    std::string name = std::string(1, static_cast<char>('a' + UniformBelow(rng, 26))) + ". " +
                       Pick(kSurnames, rng);
    if (std::find(p.authors.begin(), p.authors.end(), name) == p.authors.end()) {
      p.authors.push_back(std::move(name));
    }
  }
  p.venue = UniformBelow(rng, kVenues.size());
  p.abbreviated = UniformUnit(rng) < 0.5;
  p.year = 1985 + static_cast<int>(UniformBelow(rng, 36));
  return p;
}

std::string Typo(std::string word, Rng& rng) {
  if (word.empty()) return word;
  const std::size_t at = UniformBelow(rng, word.size());
  switch (UniformBelow(rng, 3)) {
    case 0: word[at] = static_cast<char>('a' + UniformBelow(rng, 26)); break;
    case 1: if (word.size() > 2) word.erase(at, 1); break;
    default: word.insert(word.begin() + static_cast<std::ptrdiff_t>(at),
                         static_cast<char>('a' + UniformBelow(rng, 26)));
  }
  return word;
}

// Another rendering of the same publication: one visible corruption, a
// second one with probability `noise`, plus cosmetic venue and author-order
// changes.
Paper NoisyCopy(const Paper& source, double noise, Rng& rng) {
  Paper p = source;
  const int corruptions = 1 + (UniformUnit(rng) < noise ? 1 : 0);
  for (int i = 0; i < corruptions; ++i) {
    switch (UniformBelow(rng, 4)) {
      case 0: {
        auto& w = p.title[UniformBelow(rng, p.title.size())];
        w = Typo(w, rng);
        break;
      }
      case 1:
        if (p.title.size() > 4) {
          p.title.erase(p.title.begin() +
                        static_cast<std::ptrdiff_t>(UniformBelow(rng, p.title.size())));
        }
        break;
      case 2: {
        auto& a = p.authors[UniformBelow(rng, p.authors.size())];
        a = Typo(a, rng);
        break;
      }
      default:
        if (p.authors.size() > 1) p.authors.pop_back();
    }
  }
  Shuffle(std::span<std::string>(p.authors), rng);
  if (UniformUnit(rng) < 0.3) p.abbreviated = !p.abbreviated;
  return p;
}

std::string Join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

Record ToRecord(std::string id, const Paper& p) {
  const Venue& v = kVenues[p.venue];
  return Record{std::move(id),
                {Join(p.title, " "), Join(p.authors, ", "),
                 std::string(p.abbreviated ? v.abbr : v.full), std::to_string(p.year)}};
}

int ShiftYear(int year, Rng& rng, int max_shift) {
  const int shift = 1 + static_cast<int>(UniformBelow(rng, static_cast<std::uint64_t>(max_shift)));
  return UniformUnit(rng) < 0.5 ? year - shift : year + shift;
}

std::string PaddedId(char prefix, std::size_t n) {
  std::string digits = std::to_string(n);
  return std::string(1, prefix) + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') +
         digits;
}

}  // namespace

Schema SynthSchema() {
  return Schema({{"title", ValueKind::kText},
                 {"authors", ValueKind::kEntitySet},
                 {"venue", ValueKind::kEntityName},
                 {"year", ValueKind::kNumber}});
}

SynthCorpus GenerateCorpus(const SynthSpec& spec) {
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) Fail(ErrorKind::kConfig, "noise must lie in [0,1]");
  std::vector<SynthKind> kinds;
  auto add = [&](SynthKind kind, std::size_t n) { kinds.insert(kinds.end(), n, kind); };
  add(SynthKind::kMatch, spec.matches);
  add(SynthKind::kMatchYearTypo, spec.match_year_typos);
  add(SynthKind::kNonMatch, spec.non_matches);
  add(SynthKind::kNonMatchSameYear, spec.non_matches_same_year);
  add(SynthKind::kEditionTrap, spec.edition_traps);
  add(SynthKind::kTwinEquivalent, spec.twin_pairs);
  Rng rng(spec.seed);
  Shuffle(std::span<SynthKind>(kinds), rng);
  // Each twin is followed by its content-identical sibling.
  std::vector<SynthKind> ordered;
  ordered.reserve(spec.total());
  for (SynthKind kind : kinds) {
    ordered.push_back(kind);
    if (kind == SynthKind::kTwinEquivalent) ordered.push_back(SynthKind::kTwinInequivalent);
  }

  auto store = std::make_shared<RecordStore>();
  store->schema = SynthSchema();
  store->tables.resize(2);
  SynthCorpus corpus;
  Paper twin_left;
  Paper twin_right;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const SynthKind kind = ordered[i];
    Paper left = RandomPaper(rng);
    Paper right;
    Truth truth = Truth::kInequivalent;
    const bool clean = UniformUnit(rng) < spec.clean_match_fraction;
    switch (kind) {
      case SynthKind::kMatch:
        right = clean ? left : NoisyCopy(left, spec.noise, rng);
        truth = Truth::kEquivalent;
        break;
      case SynthKind::kMatchYearTypo:
        right = NoisyCopy(left, spec.noise, rng);
        right.year = ShiftYear(left.year, rng, 1);
        truth = Truth::kEquivalent;
        break;
      case SynthKind::kNonMatch:
        right = RandomPaper(rng);
        while (right.year == left.year) right.year = RandomPaper(rng).year;
        break;
      case SynthKind::kNonMatchSameYear:
        right = RandomPaper(rng);
        right.year = left.year;
        break;
      case SynthKind::kEditionTrap:
        right = left;
        right.year = ShiftYear(left.year, rng, 3);
        break;
      case SynthKind::kTwinEquivalent:
        right = NoisyCopy(left, spec.noise, rng);
        twin_left = left;
        twin_right = right;
        truth = Truth::kEquivalent;
        break;
      case SynthKind::kTwinInequivalent:
        left = twin_left;
        right = twin_right;
        break;
    }
    const std::string left_id = PaddedId('L', i);
    const std::string right_id = PaddedId('R', i);
    store->tables[0].Add(ToRecord(left_id, left));
    store->tables[1].Add(ToRecord(right_id, right));
    corpus.workload.pairs.push_back(MakeRecordPair(left_id, right_id, static_cast<std::uint32_t>(i),
                                                   static_cast<std::uint32_t>(i), 0.5, truth));
    corpus.kinds.push_back(kind);
  }
  corpus.workload.store = std::move(store);
  return corpus;
}

std::vector<MetricDescriptor> SynthMetrics(const Schema& schema) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> plan = {
      {"title",
       {"token-jaccard", "qgram-jaccard", "edit-similarity", "diff-key-token", "non-substring",
        "non-prefix"}},
      {"authors",
       {"entity-jaccard", "token-jaccard", "edit-similarity", "diff-cardinality",
        "distinct-entity"}},
      {"venue",
       {"token-jaccard", "qgram-jaccard", "edit-similarity", "non-substring",
        "abbr-non-substring", "abbr-non-prefix"}},
      {"year", {"numeric-equality", "numeric-difference"}},
  };
  std::vector<MetricDescriptor> out;
  for (const auto& [attribute, names] : plan) {
    for (const auto& name : names) out.push_back(MakeDescriptor(schema, attribute, name));
  }
  return out;
}

std::vector<std::string> SynthClassifierColumns() {
  return {"token-jaccard(title)", "qgram-jaccard(title)", "edit-similarity(title)"};
}

}  // namespace learnrisk
