#include "learnrisk/text_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "learnrisk/error.hpp"

namespace learnrisk {

std::optional<std::size_t> DelimitedTable::Column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

// Reads one logical record, which may span lines inside quotes. Returns false
// at end of input.
bool ReadRecord(std::istream& in, char delimiter, std::vector<std::string>& fields,
                std::size_t& line_number, const std::string& source_name) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_number;
  const std::size_t start_line = line_number;

  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (in_quotes) {
        if (!std::getline(in, line)) {
          Fail(ErrorKind::kData, source_name + ":" + std::to_string(start_line) +
                                     ": unterminated quoted field");
        }
        ++line_number;
        field.push_back('\n');
        i = 0;
        continue;
      }
      break;
    }
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      in_quotes = true;
      was_quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r' && i + 1 == line.size()) {
      // CRLF line ending
    } else {
      field.push_back(c);
    }
    ++i;
  }
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

DelimitedTable ParseDelimited(std::istream& in, const std::string& source_name,
                              char delimiter) {
  DelimitedTable table;
  std::size_t line_number = 0;
  std::vector<std::string> fields;
  if (!ReadRecord(in, delimiter, fields, line_number, source_name)) {
    Fail(ErrorKind::kData, source_name + ": missing header row");
  }
  // Tolerate a UTF-8 byte order mark.
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  table.header = fields;
  while (true) {
    const std::size_t row_line = line_number + 1;
    if (!ReadRecord(in, delimiter, fields, line_number, source_name)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != table.header.size()) {
      Fail(ErrorKind::kData, source_name + ":" + std::to_string(row_line) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(fields.size()));
    }
    table.rows.push_back(fields);
    table.line_numbers.push_back(row_line);
  }
  return table;
}

DelimitedTable ReadDelimited(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kData, "cannot open " + path.string());
  return ParseDelimited(in, path.string(), delimiter);
}

std::string EscapeField(std::string_view field, char delimiter) {
  const bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                                std::string_view::npos ||
                            (!field.empty() && field.front() == ' ');
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void WriteRow(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << delimiter;
    out << EscapeField(fields[i], delimiter);
  }
  out << '\n';
}

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::optional<double> ParseDouble(std::string_view text) {
  std::string trimmed = Trim(text);
  if (trimmed == "inf" || trimmed == "+inf") return HUGE_VAL;
  if (trimmed == "-inf") return -HUGE_VAL;
  std::string_view view = trimmed;
  if (!view.empty() && view.front() == '+') view.remove_prefix(1);
  if (view.empty()) return std::nullopt;
  double value = 0.0;
  const auto result = std::from_chars(view.data(), view.data() + view.size(), value);
  if (result.ec != std::errc() || result.ptr != view.data() + view.size()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> ParseInt(std::string_view text) {
  std::string trimmed = Trim(text);
  std::string_view view = trimmed;
  if (!view.empty() && view.front() == '+') view.remove_prefix(1);
  if (view.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto result = std::from_chars(view.data(), view.data() + view.size(), value);
  if (result.ec != std::errc() || result.ptr != view.data() + view.size()) return std::nullopt;
  return value;
}

std::string Trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> parts;
  std::istringstream in{std::string(text)};
  std::string part;
  while (in >> part) parts.push_back(part);
  return parts;
}

std::uint64_t Fingerprint(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void WriteTextFile(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kData, "cannot write " + path.string());
  out << contents;
  if (!out) Fail(ErrorKind::kData, "write failed for " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kData, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace learnrisk
