#pragma once

// Flat CSV tables: UTF-8, comma separated, "." decimal separator, optional
// double-quoted fields, one header row. Lines starting with '#' are
// provenance comments and are skipped on read.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dapmap {

struct CsvTable {
  std::string source;  // file name, for error messages
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column. Throws ValidationError if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, std::string source);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes provenance comment lines, the header and rows. Fields containing
/// commas or quotes are quoted.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& provenance,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

double parse_number(const std::string& text, const std::string& context);
int parse_int(const std::string& text, const std::string& context);

/// One `key = value` pair of a flat config file.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line{0};
};

/// Parses `key = value` lines in order; '#' starts a comment, blank lines
/// are skipped. Throws ValidationError on a line without '=' or a repeated
/// key.
std::vector<KeyValue> parse_key_values(std::string_view text);

/// Fixed-point decimal rendering used by every emitted table.
std::string format_fixed(double value, int precision = 6);

}  // namespace dapmap
