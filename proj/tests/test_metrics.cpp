#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "learnrisk/error.hpp"
#include "learnrisk/metrics.hpp"
#include "learnrisk/synth.hpp"

namespace learnrisk {
namespace {

const char* kS1 = "T Brinkhoff, H Kriegel, R Schneider, B Seeger";
const char* kS2 = "T Brinkhoff, H Kriegel, B Seeger";

TEST(Normalize, LowercaseTrimCollapse) {
  EXPECT_EQ(NormalizeText("  The   VLDB\tJournal "), "the vldb journal");
  EXPECT_EQ(Tokenize("R-trees: revisited (2nd)"),
            (std::vector<std::string>{"r", "trees", "revisited", "2nd"}));
  EXPECT_EQ(Abbreviate("Journal of the ACM"), "jota");
}

TEST(NameDifference, Examples) {
  EXPECT_EQ(NameDifference("VLDB", "VLDB Journal", NameMode::kSubstring, false), 0);
  EXPECT_EQ(NameDifference("SIGMOD", "VLDB", NameMode::kSubstring, false), 1);
  EXPECT_EQ(NameDifference("Journal of the ACM", "jacm", NameMode::kSubstring, true), 0);
  EXPECT_EQ(NameDifference("Very Large Data Bases", "VLDB", NameMode::kPrefix, true), 0);
  EXPECT_EQ(NameDifference("data engineering", "engineering", NameMode::kSuffix, false), 0);
  EXPECT_EQ(NameDifference("data engineering", "data", NameMode::kSuffix, false), 1);
  EXPECT_EQ(NameDifference("data engineering", "data", NameMode::kPrefix, false), 0);
}

TEST(EntitySets, PaperAuthorLists) {
  const auto a = ParseEntitySet(kS1);
  const auto b = ParseEntitySet(kS2);
  EXPECT_EQ(a.size(), 4u);
  EXPECT_EQ(DiffCardinality(a, b), 1);
  EXPECT_EQ(DistinctEntity(a, b), 1);
  EXPECT_DOUBLE_EQ(EntityJaccard(a, b), 0.75);
}

TEST(EntitySets, TrivialCases) {
  const auto a = ParseEntitySet("x, y");
  const auto c = ParseEntitySet("p, q, r");
  EXPECT_EQ(DiffCardinality(a, a), 0);
  EXPECT_EQ(DiffCardinality({}, {}), 0);
  EXPECT_EQ(DistinctEntity(a, a), 0);
  EXPECT_EQ(DistinctEntity(a, c), 5);
  EXPECT_EQ(EntityJaccard(a, a), 1.0);
  EXPECT_EQ(EntityJaccard(a, c), 0.0);
  EXPECT_EQ(EntityJaccard({}, {}), 1.0);
  EXPECT_EQ(ParseEntitySet("a; b", ";").size(), 2u);
}

// Random entity sets drawn from a small name pool.
EntitySet RandomSet(std::mt19937_64& rng) {
  static const std::vector<std::string> pool{"a smith", "b jones", "c wu", "d li", "e ng", "f o"};
  std::string text;
  const int n = rng() % 5;
  for (int i = 0; i < n; ++i) text += pool[rng() % pool.size()] + ",";
  return ParseEntitySet(text);
}

TEST(EntitySets, SymmetryAndSetOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = RandomSet(rng);
    const auto b = RandomSet(rng);
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end()), both;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                          std::inserter(both, both.begin()));
    EXPECT_EQ(DistinctEntity(a, b), static_cast<int>(sa.size() + sb.size() - 2 * both.size()));
    EXPECT_EQ(DistinctEntity(a, b), DistinctEntity(b, a));
    EXPECT_EQ(DiffCardinality(a, b), DiffCardinality(b, a));
    EXPECT_EQ(EntityJaccard(a, b), EntityJaccard(b, a));
  }
}

TEST(DiffKeyToken, RareTokensOnToyCorpus) {
  // "common" appears in every title, "query" in five, "zeta" in one.
  std::vector<std::string> titles{"common query zeta", "common query", "common query",
                                  "common query",      "common query", "common alpha",
                                  "common beta",       "common gamma", "common delta",
                                  "common epsilon"};
  std::vector<std::string_view> docs(titles.begin(), titles.end());
  const IdfIndex index(docs);
  EXPECT_DOUBLE_EQ(index.default_key_threshold(), std::log(5.0));
  EXPECT_GE(index.Idf("zeta"), index.default_key_threshold());
  EXPECT_LT(index.Idf("query"), index.default_key_threshold());
  EXPECT_EQ(DiffKeyToken("common query", "common query", index), 0);
  EXPECT_EQ(DiffKeyToken("common query zeta", "common query", index), 1);
  EXPECT_EQ(DiffKeyToken("common query", "common", index), 0);
  EXPECT_EQ(DiffKeyToken("common zeta", "common query", index),
            DiffKeyToken("common query", "common zeta", index));
}

TEST(Similarity, Examples) {
  EXPECT_EQ(TokenJaccard("spatial join", "spatial join"), 1.0);
  EXPECT_EQ(EditDistance("data", "date"), 1u);
  EXPECT_DOUBLE_EQ(EditSimilarity("data", "date"), 0.75);
  EXPECT_EQ(EditSimilarity("", ""), 1.0);
  EXPECT_EQ(EditDistance("kitten", "sitting"), 3u);
  EXPECT_DOUBLE_EQ(TokenJaccard("a b c", "b c d"), 0.5);
  EXPECT_EQ(QGramJaccard("abcd", "abcd"), 1.0);
}

TEST(Similarity, NormalizationInvariance) {
  EXPECT_EQ(TokenJaccard("  Spatial JOIN ", "spatial join"), 1.0);
  EXPECT_EQ(EditSimilarity("Data  Base", "data base "), 1.0);
  EXPECT_EQ(NameDifference(" VLDB ", "vldb journal", NameMode::kPrefix, false), 0);
}

Schema Bib() {
  return Schema({{"title", ValueKind::kText},
                 {"authors", ValueKind::kEntitySet},
                 {"venue", ValueKind::kEntityName},
                 {"year", ValueKind::kNumber}});
}

TEST(Descriptor, ValidatesNameKindAndParams) {
  const auto schema = Bib();
  EXPECT_EQ(MakeDescriptor(schema, "year", "numeric-equality").Label(), "numeric-equality(year)");
  EXPECT_THROW(MakeDescriptor(schema, "year", "bogus"), Error);
  EXPECT_THROW(MakeDescriptor(schema, "nope", "token-jaccard"), Error);
  EXPECT_THROW(MakeDescriptor(schema, "year", "token-jaccard"), Error);
  EXPECT_THROW(MakeDescriptor(schema, "title", "token-jaccard", {{"q", "3"}}), Error);
  EXPECT_NO_THROW(MakeDescriptor(schema, "title", "diff-key-token", {{"key_threshold", "1.5"}}));
}

TEST(EvaluateMetric, NullAndNumbers) {
  const auto schema = Bib();
  const MetricContext none;
  const auto eq = MakeDescriptor(schema, "year", "numeric-equality");
  EXPECT_EQ(EvaluateMetric(eq, "1994", "1995", none), 0.0);
  EXPECT_EQ(EvaluateMetric(eq, "1994", "1994.0", none), 1.0);
  EXPECT_FALSE(EvaluateMetric(eq, std::nullopt, "1994", none).has_value());
  EXPECT_FALSE(EvaluateMetric(eq, "n/a", "1994", none).has_value());
  const auto diff = MakeDescriptor(schema, "year", "numeric-difference");
  EXPECT_EQ(EvaluateMetric(diff, "1994", "1991", none), 3.0);
  EXPECT_EQ(SimilarityMetric(MakeDescriptor(schema, "title", "token-jaccard"), "x", "x"), 1.0);
  EXPECT_THROW(SimilarityMetric(MakeDescriptor(schema, "venue", "non-prefix"), "a", "b"), Error);
}

TEST(MetricMatrix, SynthCorpusColumnsStayInRange) {
  SynthSpec spec = SynthSpec::Default(400, 5);
  spec.noise = 0.3;
  const auto corpus = GenerateCorpus(spec);
  const auto descriptors = SynthMetrics(corpus.workload.schema());
  ASSERT_EQ(descriptors.size(), 19u);
  const auto matrix = BuildMetricMatrix(corpus.workload, descriptors);
  EXPECT_EQ(matrix.rows(), 400u);
  EXPECT_EQ(matrix.cols(), 19u);
  EXPECT_TRUE(matrix.RangeViolations().empty());
  const auto again = BuildMetricMatrix(corpus.workload, descriptors);
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      const double a = matrix.at(r, c), b = again.at(r, c);
      EXPECT_TRUE(a == b || (std::isnan(a) && std::isnan(b)));
    }
  }
}

TEST(MetricMatrix, EmptyWorkload) {
  auto corpus = GenerateCorpus(SynthSpec::Default(10, 1));
  corpus.workload.pairs.clear();
  const auto matrix = BuildMetricMatrix(corpus.workload, SynthMetrics(corpus.workload.schema()));
  EXPECT_EQ(matrix.rows(), 0u);
}

TEST(MetricMatrix, SwappingRecordsKeepsSymmetricMetrics) {
  const auto corpus = GenerateCorpus(SynthSpec::Default(200, 9));
  const auto& w = corpus.workload;
  const auto descriptors = SynthMetrics(w.schema());
  const MetricContext context(*w.store, descriptors);
  for (const auto& d : descriptors) {
    if (d.name == "numeric-difference") continue;
    const auto column = *w.schema().Find(d.attribute);
    for (const auto& pair : w.pairs) {
      const auto& a = w.store->left().at(pair.left_row).values[column];
      const auto& b = w.store->right().at(pair.right_row).values[column];
      EXPECT_EQ(EvaluateMetric(d, a, b, context), EvaluateMetric(d, b, a, context)) << d.Label();
    }
  }
}

}  // namespace
}  // namespace learnrisk
