#pragma once

// Minimal numeric CSV: one header row, then rows of numbers. Blank lines and
// lines starting with '#' are skipped.

#include <string>
#include <vector>

namespace dtwpa {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws ErrorCode::parse_error when absent.
  std::size_t index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  bool has(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// Numbers use %.12g.
std::string format_csv(const CsvTable& table);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace dtwpa
