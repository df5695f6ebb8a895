#include "learnrisk/data_model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "learnrisk/error.hpp"
#include "learnrisk/random.hpp"
#include "learnrisk/text_io.hpp"

namespace learnrisk {

std::string_view ToString(MachineLabel label) {
  return label == MachineLabel::kMatching ? "matching" : "unmatching";
}

std::string_view ToString(Truth truth) {
  return truth == Truth::kEquivalent ? "equivalent" : "inequivalent";
}

std::string_view ToString(ValueKind kind) {
  switch (kind) {
    case ValueKind::kEntityName: return "entity-name";
    case ValueKind::kEntitySet: return "entity-set";
    case ValueKind::kText: return "text";
    case ValueKind::kNumber: return "number";
  }
  return "?";
}

std::optional<ValueKind> ParseValueKind(std::string_view text) {
  if (text == "entity-name") return ValueKind::kEntityName;
  if (text == "entity-set") return ValueKind::kEntitySet;
  if (text == "text") return ValueKind::kText;
  if (text == "number") return ValueKind::kNumber;
  return std::nullopt;
}

Schema::Schema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (attributes_[i].name == attributes_[j].name) {
        Fail(ErrorKind::kConfig, "duplicate schema attribute '" + attributes_[i].name + "'");
      }
    }
  }
}

std::optional<std::size_t> Schema::Find(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == name) return i;
  }
  return std::nullopt;
}

void RecordTable::Add(Record record) {
  const auto row = static_cast<std::uint32_t>(records_.size());
  if (!index_.emplace(record.id, row).second) {
    Fail(ErrorKind::kData, "duplicate record id '" + record.id + "'");
  }
  records_.push_back(std::move(record));
}

const Record* RecordTable::Find(std::string_view id) const {
  const auto row = RowOf(id);
  return row ? &records_[*row] : nullptr;
}

std::optional<std::uint32_t> RecordTable::RowOf(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

MachineLabel DeriveMachineLabel(double classifier_prob) {
  return classifier_prob >= 0.5 ? MachineLabel::kMatching : MachineLabel::kUnmatching;
}

std::optional<int> DeriveRiskLabel(MachineLabel label, std::optional<Truth> truth) {
  if (!truth) return std::nullopt;
  const bool says_match = label == MachineLabel::kMatching;
  const bool is_match = *truth == Truth::kEquivalent;
  return says_match != is_match ? 1 : 0;
}

RecordPair MakeRecordPair(std::string left_id, std::string right_id, std::uint32_t left_row,
                          std::uint32_t right_row, double classifier_prob,
                          std::optional<Truth> ground_truth) {
  if (!(classifier_prob >= 0.0 && classifier_prob <= 1.0)) {
    Fail(ErrorKind::kData, "classifier probability " + FormatDouble(classifier_prob) +
                               " outside [0,1]");
  }
  RecordPair pair;
  pair.left_id = std::move(left_id);
  pair.right_id = std::move(right_id);
  pair.left_row = left_row;
  pair.right_row = right_row;
  pair.classifier_prob = classifier_prob;
  pair.machine_label = DeriveMachineLabel(classifier_prob);
  pair.ground_truth = ground_truth;
  pair.risk_label = DeriveRiskLabel(pair.machine_label, ground_truth);
  return pair;
}

std::size_t Workload::CountEquivalent() const {
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const auto& p) {
    return p.ground_truth == Truth::kEquivalent;
  }));
}

bool Workload::HasGroundTruth() const {
  return std::all_of(pairs.begin(), pairs.end(),
                     [](const auto& p) { return p.ground_truth.has_value(); });
}

std::shared_ptr<const RecordStore> LoadRecords(const std::vector<std::filesystem::path>& files,
                                               const Schema& schema, char delimiter,
                                               const std::string& id_column) {
  if (files.empty() || files.size() > 2) {
    Fail(ErrorKind::kConfig, "expected one or two record files, got " +
                                 std::to_string(files.size()));
  }
  auto store = std::make_shared<RecordStore>();
  store->schema = schema;
  for (const auto& file : files) {
    const DelimitedTable table = ReadDelimited(file, delimiter);
    const auto id_col = table.Column(id_column);
    if (!id_col) Fail(ErrorKind::kData, file.string() + ": missing id column '" + id_column + "'");
    std::vector<std::size_t> columns;
    for (const auto& attribute : schema.attributes()) {
      const auto col = table.Column(attribute.name);
      if (!col) {
        Fail(ErrorKind::kData, file.string() + ": schema attribute '" + attribute.name +
                                   "' absent from table");
      }
      columns.push_back(*col);
    }
    RecordTable records;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      Record record;
      record.id = Trim(row[*id_col]);
      if (record.id.empty()) {
        Fail(ErrorKind::kData, file.string() + ":" + std::to_string(table.line_numbers[r]) +
                                   ": empty record id");
      }
      for (std::size_t col : columns) {
        if (Trim(row[col]).empty()) {
          record.values.emplace_back(std::nullopt);
        } else {
          record.values.emplace_back(row[col]);
        }
      }
      try {
        records.Add(std::move(record));
      } catch (const Error& e) {
        Fail(ErrorKind::kData, file.string() + ":" + std::to_string(table.line_numbers[r]) +
                                   ": " + e.what());
      }
    }
    store->tables.push_back(std::move(records));
  }
  return store;
}

Workload LoadPairs(std::shared_ptr<const RecordStore> store, const std::filesystem::path& pair_file,
                   char delimiter) {
  const DelimitedTable table = ReadDelimited(pair_file, delimiter);
  const auto left_col = table.Column("left_id");
  const auto right_col = table.Column("right_id");
  const auto prob_col = table.Column("classifier_prob");
  const auto truth_col = table.Column("ground_truth");
  if (!left_col || !right_col || !prob_col) {
    Fail(ErrorKind::kData,
         pair_file.string() + ": header must contain left_id, right_id, classifier_prob");
  }

  Workload workload;
  workload.store = store;
  workload.pairs.reserve(table.rows.size());
  std::vector<std::string> problems;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = pair_file.string() + ":" + std::to_string(table.line_numbers[r]);
    const std::string left = Trim(row[*left_col]);
    const std::string right = Trim(row[*right_col]);
    const auto left_row = store->left().RowOf(left);
    const auto right_row = store->right().RowOf(right);
    const auto prob = ParseDouble(row[*prob_col]);
    std::optional<Truth> truth;
    bool ok = true;
    if (!left_row) {
      problems.push_back(where + ": unknown left record id '" + left + "'");
      ok = false;
    }
    if (!right_row) {
      problems.push_back(where + ": unknown right record id '" + right + "'");
      ok = false;
    }
    if (!prob || !(*prob >= 0.0 && *prob <= 1.0)) {
      problems.push_back(where + ": classifier_prob '" + row[*prob_col] + "' not in [0,1]");
      ok = false;
    }
    if (truth_col) {
      const std::string flag = Trim(row[*truth_col]);
      if (flag == "1") {
        truth = Truth::kEquivalent;
      } else if (flag == "0") {
        truth = Truth::kInequivalent;
      } else if (!flag.empty()) {
        problems.push_back(where + ": ground_truth '" + flag + "' must be 0, 1 or empty");
        ok = false;
      }
    }
    if (ok && !seen.emplace(left + "|" + right, r).second) {
      problems.push_back(where + ": duplicate pair (" + left + ", " + right + ")");
      ok = false;
    }
    if (ok) {
      workload.pairs.push_back(MakeRecordPair(left, right, *left_row, *right_row, *prob, truth));
    }
    if (problems.size() >= 20) break;
  }
  if (!problems.empty()) {
    std::ostringstream message;
    message << "malformed pair rows:";
    for (const auto& p : problems) message << "\n  " << p;
    Fail(ErrorKind::kData, message.str());
  }
  return workload;
}

Workload LoadWorkload(const LoadOptions& options) {
  auto store = LoadRecords(options.record_files, options.schema, options.delimiter,
                           options.id_column);
  return LoadPairs(std::move(store), options.pair_file, options.delimiter);
}

std::string SerializePairs(const Workload& workload, char delimiter) {
  std::ostringstream out;
  WriteRow(out, {"left_id", "right_id", "classifier_prob", "ground_truth"}, delimiter);
  for (const auto& pair : workload.pairs) {
    std::string truth;
    if (pair.ground_truth) truth = *pair.ground_truth == Truth::kEquivalent ? "1" : "0";
    WriteRow(out, {pair.left_id, pair.right_id, FormatDouble(pair.classifier_prob), truth},
             delimiter);
  }
  return out.str();
}

std::string SerializeRecords(const RecordTable& table, const Schema& schema, char delimiter,
                             const std::string& id_column) {
  std::ostringstream out;
  std::vector<std::string> header{id_column};
  for (const auto& attribute : schema.attributes()) header.push_back(attribute.name);
  WriteRow(out, header, delimiter);
  for (const auto& record : table.records()) {
    std::vector<std::string> row{record.id};
    for (const auto& value : record.values) row.push_back(value.value_or(""));
    WriteRow(out, row, delimiter);
  }
  return out.str();
}

std::array<std::size_t, 3> SplitSizes(std::size_t n, const std::array<unsigned, 3>& ratio) {
  const std::uint64_t total = std::uint64_t{ratio[0]} + ratio[1] + ratio[2];
  if (total == 0) Fail(ErrorKind::kInvalidArgument, "split ratio must not be all zero");
  std::array<std::size_t, 3> sizes{};
  std::array<std::uint64_t, 3> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const std::uint64_t scaled = static_cast<std::uint64_t>(n) * ratio[i];
    sizes[i] = static_cast<std::size_t>(scaled / total);
    remainders[i] = scaled % total;
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

std::array<Workload, 3> SplitWorkload(const Workload& workload,
                                      const std::array<unsigned, 3>& ratio, std::uint64_t seed) {
  const auto sizes = SplitSizes(workload.size(), ratio);
  std::vector<std::size_t> order(workload.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  Shuffle(std::span<std::size_t>(order), rng);

  constexpr std::array<WorkloadRole, 3> roles{WorkloadRole::kClassifierTrain,
                                              WorkloadRole::kRiskTrain, WorkloadRole::kTest};
  std::array<Workload, 3> parts;
  std::size_t offset = 0;
  for (int i = 0; i < 3; ++i) {
    std::vector<std::size_t> indices(order.begin() + offset, order.begin() + offset + sizes[i]);
    std::sort(indices.begin(), indices.end());
    parts[i] = SelectPairs(workload, indices, roles[i]);
    offset += sizes[i];
  }
  return parts;
}

Workload SelectPairs(const Workload& workload, std::span<const std::size_t> indices,
                     WorkloadRole role) {
  Workload out;
  out.store = workload.store;
  out.role = role;
  out.pairs.reserve(indices.size());
  for (std::size_t i : indices) out.pairs.push_back(workload.pairs.at(i));
  return out;
}

Workload WithClassifierProbs(const Workload& workload, std::span<const double> probs) {
  if (probs.size() != workload.size()) {
    Fail(ErrorKind::kInvalidArgument, "probability count does not match workload size");
  }
  Workload out = workload;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = workload.pairs[i];
    out.pairs[i] = MakeRecordPair(p.left_id, p.right_id, p.left_row, p.right_row, probs[i],
                                  p.ground_truth);
  }
  return out;
}

}  // namespace learnrisk
