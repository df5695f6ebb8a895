#include "learnrisk/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "learnrisk/error.hpp"
#include "learnrisk/text_io.hpp"

namespace learnrisk {

namespace {

using VK = ValueKind;

const std::vector<MetricInfo> kMetrics = {
    {"non-substring", MetricKind::kDifference, MetricRange::kBoolean, {VK::kEntityName, VK::kText}},
    {"non-prefix", MetricKind::kDifference, MetricRange::kBoolean, {VK::kEntityName, VK::kText}},
    {"non-suffix", MetricKind::kDifference, MetricRange::kBoolean, {VK::kEntityName, VK::kText}},
    {"abbr-non-substring", MetricKind::kDifference, MetricRange::kBoolean, {VK::kEntityName, VK::kText}},
    {"abbr-non-prefix", MetricKind::kDifference, MetricRange::kBoolean, {VK::kEntityName, VK::kText}},
    {"abbr-non-suffix", MetricKind::kDifference, MetricRange::kBoolean, {VK::kEntityName, VK::kText}},
    {"diff-cardinality", MetricKind::kDifference, MetricRange::kBoolean, {VK::kEntitySet}},
    {"distinct-entity", MetricKind::kDifference, MetricRange::kCount, {VK::kEntitySet}},
    {"diff-key-token", MetricKind::kDifference, MetricRange::kCount, {VK::kText, VK::kEntityName}},
    {"numeric-difference", MetricKind::kDifference, MetricRange::kReal, {VK::kNumber}},
    {"token-jaccard", MetricKind::kSimilarity, MetricRange::kUnit, {VK::kText, VK::kEntityName, VK::kEntitySet}},
    {"qgram-jaccard", MetricKind::kSimilarity, MetricRange::kUnit, {VK::kText, VK::kEntityName}},
    {"edit-similarity", MetricKind::kSimilarity, MetricRange::kUnit, {VK::kText, VK::kEntityName, VK::kEntitySet}},
    {"entity-jaccard", MetricKind::kSimilarity, MetricRange::kUnit, {VK::kEntitySet}},
    {"numeric-equality", MetricKind::kSimilarity, MetricRange::kBoolean, {VK::kNumber}},
};

bool IsTokenChar(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::vector<std::string> UniqueTokens(std::string_view text) {
  auto tokens = Tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

template <typename T>
double SetJaccard(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<T> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const std::size_t unions = a.size() + b.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(unions);
}

bool Related(std::string_view x, std::string_view y, NameMode mode) {
  switch (mode) {
    case NameMode::kSubstring: return y.find(x) != std::string_view::npos;
    case NameMode::kPrefix: return y.substr(0, x.size()) == x;
    case NameMode::kSuffix:
      return x.size() <= y.size() && y.substr(y.size() - x.size()) == x;
  }
  return false;
}

bool EitherRelated(std::string_view x, std::string_view y, NameMode mode) {
  return Related(x, y, mode) || Related(y, x, mode);
}

std::optional<double> ParseNumber(const std::string& text) {
  const auto value = ParseDouble(text);
  if (!value || !std::isfinite(*value)) return std::nullopt;
  return value;
}

std::string ParamOr(const MetricDescriptor& d, const std::string& key, std::string fallback) {
  const auto it = d.params.find(key);
  return it == d.params.end() ? fallback : it->second;
}

}  // namespace

const MetricInfo* FindMetric(std::string_view name) {
  for (const auto& info : kMetrics) {
    if (info.name == name) return &info;
  }
  return nullptr;
}

const std::vector<MetricInfo>& AllMetrics() { return kMetrics; }

MetricRange MetricDescriptor::range() const {
  const MetricInfo* info = FindMetric(name);
  if (!info) Fail(ErrorKind::kConfig, "unknown metric '" + name + "'");
  return info->range;
}

MetricDescriptor MakeDescriptor(const Schema& schema, std::string_view attribute,
                                std::string_view name, std::map<std::string, std::string> params) {
  const MetricInfo* info = FindMetric(name);
  if (!info) Fail(ErrorKind::kConfig, "unknown metric '" + std::string(name) + "'");
  const auto index = schema.Find(attribute);
  if (!index) {
    Fail(ErrorKind::kConfig, "metric " + std::string(name) + " references unknown attribute '" +
                                 std::string(attribute) + "'");
  }
  const ValueKind family = schema.attributes()[*index].kind;
  if (std::find(info->families.begin(), info->families.end(), family) == info->families.end()) {
    Fail(ErrorKind::kConfig, "metric " + std::string(name) + " does not apply to " +
                                 std::string(ToString(family)) + " attribute '" +
                                 std::string(attribute) + "'");
  }
  for (const auto& [key, value] : params) {
    if (key == "splitter") continue;
    if (key == "key_threshold" && name == "diff-key-token") {
      if (!ParseDouble(value)) Fail(ErrorKind::kConfig, "key_threshold must be a number");
      continue;
    }
    Fail(ErrorKind::kConfig, "metric " + std::string(name) + ": unknown parameter '" + key + "'");
  }
  MetricDescriptor d;
  d.name = std::string(name);
  d.attribute = std::string(attribute);
  d.kind = info->kind;
  d.family = family;
  d.params = std::move(params);
  return d;
}

std::string NormalizeText(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (IsTokenChar(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string Abbreviate(std::string_view text) {
  std::string out;
  for (const auto& token : Tokenize(text)) out.push_back(token.front());
  return out;
}

EntitySet ParseEntitySet(std::string_view text, std::string_view splitter) {
  EntitySet names;
  if (splitter.empty()) splitter = ",";
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(splitter, start);
    if (end == std::string_view::npos) end = text.size();
    std::string name = NormalizeText(text.substr(start, end - start));
    if (!name.empty()) names.push_back(std::move(name));
    start = end + splitter.size();
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

int NameDifference(std::string_view a, std::string_view b, NameMode mode, bool abbreviated) {
  const std::string na = NormalizeText(a);
  const std::string nb = NormalizeText(b);
  if (!abbreviated) return EitherRelated(na, nb, mode) ? 0 : 1;
  const bool related =
      EitherRelated(Abbreviate(na), nb, mode) || EitherRelated(Abbreviate(nb), na, mode);
  return related ? 0 : 1;
}

int DiffCardinality(const EntitySet& a, const EntitySet& b) { return a.size() != b.size(); }

int DistinctEntity(const EntitySet& a, const EntitySet& b) {
  std::vector<std::string> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  return static_cast<int>(diff.size());
}

double EntityJaccard(const EntitySet& a, const EntitySet& b) { return SetJaccard(a, b); }

IdfIndex::IdfIndex(const std::vector<std::string_view>& documents) {
  for (std::string_view document : documents) {
    for (auto& token : UniqueTokens(document)) ++document_frequency_[std::move(token)];
  }
  documents_ = documents.size();
  default_key_threshold_ = std::log(static_cast<double>(documents_) / 2.0);
}

double IdfIndex::Idf(const std::string& token) const {
  const auto it = document_frequency_.find(token);
  if (it == document_frequency_.end()) return HUGE_VAL;
  return std::log(static_cast<double>(documents_) / static_cast<double>(it->second));
}

int DiffKeyToken(std::string_view a, std::string_view b, const IdfIndex& index,
                 std::optional<double> key_threshold) {
  const double threshold = key_threshold.value_or(index.default_key_threshold());
  const auto ta = UniqueTokens(a);
  const auto tb = UniqueTokens(b);
  std::vector<std::string> diff;
  std::set_symmetric_difference(ta.begin(), ta.end(), tb.begin(), tb.end(),
                                std::back_inserter(diff));
  return static_cast<int>(std::count_if(diff.begin(), diff.end(), [&](const std::string& t) {
    return index.Idf(t) >= threshold;
  }));
}

std::size_t EditDistance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double EditSimilarity(std::string_view a, std::string_view b) {
  const std::string na = NormalizeText(a);
  const std::string nb = NormalizeText(b);
  const std::size_t longest = std::max(na.size(), nb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(EditDistance(na, nb)) / static_cast<double>(longest);
}

double TokenJaccard(std::string_view a, std::string_view b) {
  return SetJaccard(UniqueTokens(a), UniqueTokens(b));
}

double QGramJaccard(std::string_view a, std::string_view b, std::size_t q) {
  auto grams = [q](std::string_view text) {
    const std::string normalized = NormalizeText(text);
    std::vector<std::string> out;
    if (normalized.size() <= q) {
      if (!normalized.empty()) out.push_back(normalized);
    } else {
      for (std::size_t i = 0; i + q <= normalized.size(); ++i) out.push_back(normalized.substr(i, q));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  return SetJaccard(grams(a), grams(b));
}

MetricContext::MetricContext(const RecordStore& store,
                             std::span<const MetricDescriptor> descriptors) {
  for (const auto& d : descriptors) {
    if (d.name != "diff-key-token" || idf_.count(d.attribute)) continue;
    const auto column = store.schema.Find(d.attribute);
    if (!column) Fail(ErrorKind::kConfig, "unknown attribute '" + d.attribute + "'");
    std::vector<std::string_view> documents;
    for (const auto& table : store.tables) {
      for (const auto& record : table.records()) {
        if (record.values[*column]) documents.push_back(*record.values[*column]);
      }
    }
    idf_.emplace(d.attribute, IdfIndex(documents));
  }
}

const IdfIndex* MetricContext::FindIdf(const std::string& attribute) const {
  const auto it = idf_.find(attribute);
  return it == idf_.end() ? nullptr : &it->second;
}

void MetricContext::AddIdf(const std::string& attribute, IdfIndex index) {
  idf_.insert_or_assign(attribute, std::move(index));
}

std::optional<double> EvaluateMetric(const MetricDescriptor& d, const AttributeValue& a,
                                     const AttributeValue& b, const MetricContext& context) {
  if (!a || !b) return std::nullopt;
  const std::string& x = *a;
  const std::string& y = *b;
  const std::string& n = d.name;

  if (n == "non-substring") return NameDifference(x, y, NameMode::kSubstring, false);
  if (n == "non-prefix") return NameDifference(x, y, NameMode::kPrefix, false);
  if (n == "non-suffix") return NameDifference(x, y, NameMode::kSuffix, false);
  if (n == "abbr-non-substring") return NameDifference(x, y, NameMode::kSubstring, true);
  if (n == "abbr-non-prefix") return NameDifference(x, y, NameMode::kPrefix, true);
  if (n == "abbr-non-suffix") return NameDifference(x, y, NameMode::kSuffix, true);
  if (n == "diff-cardinality" || n == "distinct-entity" || n == "entity-jaccard") {
    const std::string splitter = ParamOr(d, "splitter", ",");
    const EntitySet sa = ParseEntitySet(x, splitter);
    const EntitySet sb = ParseEntitySet(y, splitter);
    if (n == "diff-cardinality") return DiffCardinality(sa, sb);
    if (n == "distinct-entity") return DistinctEntity(sa, sb);
    return EntityJaccard(sa, sb);
  }
  if (n == "diff-key-token") {
    const IdfIndex* index = context.FindIdf(d.attribute);
    if (!index) Fail(ErrorKind::kInvalidArgument, "no idf index for attribute '" + d.attribute + "'");
    std::optional<double> threshold;
    if (const auto it = d.params.find("key_threshold"); it != d.params.end()) {
      threshold = ParseDouble(it->second);
    }
    return DiffKeyToken(x, y, *index, threshold);
  }
  if (n == "numeric-equality" || n == "numeric-difference") {
    const auto va = ParseNumber(x);
    const auto vb = ParseNumber(y);
    if (!va || !vb) return std::nullopt;
    if (n == "numeric-equality") return *va == *vb ? 1.0 : 0.0;
    return *va - *vb;
  }
  if (n == "token-jaccard") return TokenJaccard(x, y);
  if (n == "qgram-jaccard") return QGramJaccard(x, y);
  if (n == "edit-similarity") return EditSimilarity(x, y);
  Fail(ErrorKind::kConfig, "unknown metric '" + n + "'");
}

double SimilarityMetric(const MetricDescriptor& descriptor, std::string_view a,
                        std::string_view b) {
  const MetricInfo* info = FindMetric(descriptor.name);
  if (!info) Fail(ErrorKind::kInvalidArgument, "unknown metric '" + descriptor.name + "'");
  if (info->kind != MetricKind::kSimilarity) {
    Fail(ErrorKind::kInvalidArgument, descriptor.name + " is not a similarity metric");
  }
  const auto value =
      EvaluateMetric(descriptor, std::string(a), std::string(b), MetricContext{});
  // Only unparseable numbers are flagged here; they compare as unequal.
  return value.value_or(0.0);
}

MetricMatrix::MetricMatrix(std::vector<MetricDescriptor> descriptors, std::size_t rows)
    : descriptors_(std::move(descriptors)),
      rows_(rows),
      values_(descriptors_.size() * rows, std::numeric_limits<double>::quiet_NaN()) {}

std::optional<std::size_t> MetricMatrix::FindColumn(std::string_view label) const {
  for (std::size_t c = 0; c < descriptors_.size(); ++c) {
    if (descriptors_[c].Label() == label) return c;
  }
  return std::nullopt;
}

std::vector<std::string> MetricMatrix::RangeViolations() const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < cols(); ++c) {
    const MetricRange range = descriptors_[c].range();
    for (std::size_t r = 0; r < rows_; ++r) {
      if (flagged(r, c)) continue;
      const double v = at(r, c);
      bool ok = std::isfinite(v);
      switch (range) {
        case MetricRange::kBoolean: ok = ok && (v == 0.0 || v == 1.0); break;
        case MetricRange::kCount: ok = ok && v >= 0.0 && v == std::floor(v); break;
        case MetricRange::kUnit: ok = ok && v >= 0.0 && v <= 1.0; break;
        case MetricRange::kReal: break;
      }
      if (!ok) out.push_back(std::to_string(r) + "," + std::to_string(c));
    }
  }
  return out;
}

MetricMatrix BuildMetricMatrix(const Workload& workload,
                               const std::vector<MetricDescriptor>& descriptors,
                               const MetricContext& context) {
  MetricMatrix matrix(descriptors, workload.size());
  std::vector<std::size_t> columns;
  for (const auto& d : descriptors) {
    const auto column = workload.schema().Find(d.attribute);
    if (!column) Fail(ErrorKind::kConfig, "unknown attribute '" + d.attribute + "'");
    columns.push_back(*column);
  }
  const RecordStore& store = *workload.store;
  for (std::size_t r = 0; r < workload.size(); ++r) {
    const RecordPair& pair = workload.pairs[r];
    const Record& left = store.left().at(pair.left_row);
    const Record& right = store.right().at(pair.right_row);
    for (std::size_t c = 0; c < descriptors.size(); ++c) {
      matrix.set(r, c, EvaluateMetric(descriptors[c], left.values[columns[c]],
                                      right.values[columns[c]], context));
    }
  }
  return matrix;
}

MetricMatrix BuildMetricMatrix(const Workload& workload,
                               const std::vector<MetricDescriptor>& descriptors) {
  const MetricContext context(*workload.store, descriptors);
  return BuildMetricMatrix(workload, descriptors, context);
}

}  // namespace learnrisk
