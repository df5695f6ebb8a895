#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "learnrisk/data_model.hpp"

namespace learnrisk {

enum class MetricKind : std::uint8_t { kSimilarity, kDifference };

// Declared value range of a metric column.
enum class MetricRange : std::uint8_t {
  kBoolean,  // {0, 1}
  kCount,    // non-negative integers
  kUnit,     // [0, 1]
  kReal,     // any finite real
};

enum class NameMode : std::uint8_t { kSubstring, kPrefix, kSuffix };

struct MetricInfo {
  std::string_view name;
  MetricKind kind;
  MetricRange range;
  std::vector<ValueKind> families;
};

// Registry of supported basic metrics; nullptr for an unknown name.
const MetricInfo* FindMetric(std::string_view name);
const std::vector<MetricInfo>& AllMetrics();

struct MetricDescriptor {
  std::string name;       // registry name, e.g. "diff-key-token"
  std::string attribute;  // schema attribute the metric reads
  MetricKind kind = MetricKind::kSimilarity;
  ValueKind family = ValueKind::kText;
  std::map<std::string, std::string> params;

  // Column label used in rule files, e.g. "diff-key-token(title)".
  std::string Label() const { return name + "(" + attribute + ")"; }
  MetricRange range() const;
};

// Validates the metric name and that it applies to the attribute's kind.
MetricDescriptor MakeDescriptor(const Schema& schema, std::string_view attribute,
                                std::string_view name,
                                std::map<std::string, std::string> params = {});

// Lowercase (ASCII), trim, collapse internal whitespace runs to one space.
std::string NormalizeText(std::string_view text);
// Lowercased tokens split on non-alphanumeric ASCII; bytes >= 0x80 count as
// alphanumeric so UTF-8 letters stay inside tokens.
std::vector<std::string> Tokenize(std::string_view text);
// First letter of every token.
std::string Abbreviate(std::string_view text);

// Normalized, de-duplicated, sorted entity names.
using EntitySet = std::vector<std::string>;
EntitySet ParseEntitySet(std::string_view text, std::string_view splitter = ",");

// 0 when (normalized) one value is a substring/prefix/suffix of the other,
// else 1. In abbreviated mode the first-letter abbreviation of each value is
// tested against the other value, in both directions.
int NameDifference(std::string_view a, std::string_view b, NameMode mode, bool abbreviated);

int DiffCardinality(const EntitySet& a, const EntitySet& b);
int DistinctEntity(const EntitySet& a, const EntitySet& b);
double EntityJaccard(const EntitySet& a, const EntitySet& b);

// Token -> inverse document frequency, idf = ln(N / df), over one attribute
// of every record in a store.
class IdfIndex {
 public:
  IdfIndex() = default;
  explicit IdfIndex(const std::vector<std::string_view>& documents);

  std::size_t documents() const { return documents_; }
  // +inf for a token never seen.
  double Idf(const std::string& token) const;
  // ln(N / 2): tokens occurring in at most two documents are key tokens.
  double default_key_threshold() const { return default_key_threshold_; }

 private:
  std::unordered_map<std::string, std::size_t> document_frequency_;
  std::size_t documents_ = 0;
  double default_key_threshold_ = 0.0;
};

// Number of key tokens (idf >= threshold) present in exactly one of the values.
int DiffKeyToken(std::string_view a, std::string_view b, const IdfIndex& index,
                 std::optional<double> key_threshold = std::nullopt);

std::size_t EditDistance(std::string_view a, std::string_view b);
// 1 - distance / max length over normalized text; 1 for two empty strings.
double EditSimilarity(std::string_view a, std::string_view b);
double TokenJaccard(std::string_view a, std::string_view b);
double QGramJaccard(std::string_view a, std::string_view b, std::size_t q = 3);

// Corpus statistics needed by some metrics (idf indexes per attribute).
class MetricContext {
 public:
  MetricContext() = default;
  MetricContext(const RecordStore& store, std::span<const MetricDescriptor> descriptors);

  const IdfIndex* FindIdf(const std::string& attribute) const;
  void AddIdf(const std::string& attribute, IdfIndex index);

 private:
  std::map<std::string, IdfIndex> idf_;
};

// Evaluates one descriptor on a value pair; nullopt marks a flagged cell
// (null input or an unparseable number).
std::optional<double> EvaluateMetric(const MetricDescriptor& descriptor, const AttributeValue& a,
                                     const AttributeValue& b, const MetricContext& context);

// Similarity-kind evaluation on non-null values. Throws on unknown or
// difference-kind descriptors.
double SimilarityMetric(const MetricDescriptor& descriptor, std::string_view a,
                        std::string_view b);

// Pair x descriptor table. Stored column-major; NaN marks a flagged cell.
class MetricMatrix {
 public:
  MetricMatrix() = default;
  MetricMatrix(std::vector<MetricDescriptor> descriptors, std::size_t rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return descriptors_.size(); }
  const std::vector<MetricDescriptor>& descriptors() const { return descriptors_; }

  double at(std::size_t row, std::size_t col) const { return values_[col * rows_ + row]; }
  bool flagged(std::size_t row, std::size_t col) const { return at(row, col) != at(row, col); }
  void set(std::size_t row, std::size_t col, std::optional<double> value) {
    values_[col * rows_ + row] = value ? *value : std::numeric_limits<double>::quiet_NaN();
  }
  std::span<const double> column(std::size_t col) const {
    return {values_.data() + col * rows_, rows_};
  }
  std::optional<std::size_t> FindColumn(std::string_view label) const;

  // Cells that violate their descriptor's declared range, as "row,col" text.
  std::vector<std::string> RangeViolations() const;

 private:
  std::vector<MetricDescriptor> descriptors_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
};

MetricMatrix BuildMetricMatrix(const Workload& workload,
                               const std::vector<MetricDescriptor>& descriptors,
                               const MetricContext& context);
MetricMatrix BuildMetricMatrix(const Workload& workload,
                               const std::vector<MetricDescriptor>& descriptors);

}  // namespace learnrisk
