#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace learnrisk {

enum class MachineLabel : std::uint8_t { kUnmatching = 0, kMatching = 1 };
enum class Truth : std::uint8_t { kInequivalent = 0, kEquivalent = 1 };
enum class ValueKind : std::uint8_t { kEntityName, kEntitySet, kText, kNumber };
enum class WorkloadRole : std::uint8_t { kUnsplit, kClassifierTrain, kRiskTrain, kTest };

std::string_view ToString(MachineLabel label);
std::string_view ToString(Truth truth);
std::string_view ToString(ValueKind kind);
std::optional<ValueKind> ParseValueKind(std::string_view text);

struct Attribute {
  std::string name;
  ValueKind kind;
};

// Ordered attribute list shared by every table of a workload.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Attribute> attributes);

  const std::vector<Attribute>& attributes() const { return attributes_; }
  std::size_t size() const { return attributes_.size(); }
  std::optional<std::size_t> Find(std::string_view name) const;

 private:
  std::vector<Attribute> attributes_;
};

// An attribute value; nullopt is a null (missing) cell.
using AttributeValue = std::optional<std::string>;

struct Record {
  std::string id;
  std::vector<AttributeValue> values;  // aligned with the schema
};

class RecordTable {
 public:
  void Add(Record record);
  const Record* Find(std::string_view id) const;
  std::optional<std::uint32_t> RowOf(std::string_view id) const;

  const std::vector<Record>& records() const { return records_; }
  const Record& at(std::uint32_t row) const { return records_.at(row); }

 private:
  std::vector<Record> records_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Source tables of a workload. A single table means pairs are drawn within
// it (left and right ids resolve against the same table).
struct RecordStore {
  Schema schema;
  std::vector<RecordTable> tables;  // one or two

  const RecordTable& left() const { return tables.front(); }
  const RecordTable& right() const { return tables.back(); }
};

struct RecordPair {
  std::string left_id;
  std::string right_id;
  std::uint32_t left_row = 0;
  std::uint32_t right_row = 0;
  double classifier_prob = 0.0;
  MachineLabel machine_label = MachineLabel::kUnmatching;
  std::optional<Truth> ground_truth;
  std::optional<int> risk_label;  // 1 = mislabeled, 0 = correct

  // Stable identifier used for tie-breaking and joins.
  std::string Key() const { return left_id + "|" + right_id; }

  friend bool operator==(const RecordPair&, const RecordPair&) = default;
};

// Probabilities at or above 0.5 are labeled matching.
MachineLabel DeriveMachineLabel(double classifier_prob);
std::optional<int> DeriveRiskLabel(MachineLabel label, std::optional<Truth> truth);

// Builds a pair with its derived labels. Throws on a probability outside [0,1].
RecordPair MakeRecordPair(std::string left_id, std::string right_id, std::uint32_t left_row,
                          std::uint32_t right_row, double classifier_prob,
                          std::optional<Truth> ground_truth);

struct Workload {
  std::shared_ptr<const RecordStore> store;
  std::vector<RecordPair> pairs;
  WorkloadRole role = WorkloadRole::kUnsplit;

  const Schema& schema() const { return store->schema; }
  std::size_t size() const { return pairs.size(); }
  std::size_t CountEquivalent() const;
  bool HasGroundTruth() const;
};

struct LoadOptions {
  std::vector<std::filesystem::path> record_files;  // one or two tables
  std::filesystem::path pair_file;
  Schema schema;
  char delimiter = ',';
  std::string id_column = "id";
};

std::shared_ptr<const RecordStore> LoadRecords(const std::vector<std::filesystem::path>& files,
                                               const Schema& schema, char delimiter = ',',
                                               const std::string& id_column = "id");
Workload LoadPairs(std::shared_ptr<const RecordStore> store, const std::filesystem::path& pair_file,
                   char delimiter = ',');
Workload LoadWorkload(const LoadOptions& options);

// Pair file text: left_id, right_id, classifier_prob, ground_truth.
std::string SerializePairs(const Workload& workload, char delimiter = ',');
std::string SerializeRecords(const RecordTable& table, const Schema& schema,
                             char delimiter = ',', const std::string& id_column = "id");

// Largest-remainder apportionment of n items by ratio; ties in the remainder
// go to the earlier part.
std::array<std::size_t, 3> SplitSizes(std::size_t n, const std::array<unsigned, 3>& ratio);

// Seeded shuffle, then contiguous parts sized by SplitSizes. Each part keeps
// the input order of its pairs.
std::array<Workload, 3> SplitWorkload(const Workload& workload,
                                      const std::array<unsigned, 3>& ratio, std::uint64_t seed);

Workload SelectPairs(const Workload& workload, std::span<const std::size_t> indices,
                     WorkloadRole role);

// Copy with classifier probabilities (and the labels derived from them) replaced.
Workload WithClassifierProbs(const Workload& workload, std::span<const double> probs);

}  // namespace learnrisk
