#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace learnrisk {

// Header-first delimited text table. Quoting follows RFC 4180: a field may be
// wrapped in double quotes, and "" inside a quoted field is a literal quote.
struct DelimitedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number of each row in the source (header is line 1).
  std::vector<std::size_t> line_numbers;

  // Index of a header column, or nullopt.
  std::optional<std::size_t> Column(std::string_view name) const;
};

DelimitedTable ReadDelimited(const std::filesystem::path& path, char delimiter = ',');
DelimitedTable ParseDelimited(std::istream& in, const std::string& source_name,
                              char delimiter = ',');

// Quotes a field only when needed.
std::string EscapeField(std::string_view field, char delimiter = ',');
void WriteRow(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

// Shortest decimal text that parses back to the identical double.
std::string FormatDouble(double value);
// Strict parse of the whole string; nullopt on any trailing garbage.
std::optional<double> ParseDouble(std::string_view text);
std::optional<std::int64_t> ParseInt(std::string_view text);

std::string Trim(std::string_view text);
std::vector<std::string> SplitWhitespace(std::string_view text);

// FNV-1a, used to fingerprint rule files.
std::uint64_t Fingerprint(std::string_view text);

void WriteTextFile(const std::filesystem::path& path, const std::string& contents);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace learnrisk
