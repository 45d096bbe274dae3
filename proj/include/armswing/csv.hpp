#pragma once

#include <string>
#include <vector>

namespace armswing {

/// Small comma-separated table. Values never contain commas or quotes, so
/// no quoting is applied.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const;  // throws when missing
  std::vector<double> column(const std::string& name) const;
  std::vector<std::string> text_column(const std::string& name) const;
  void add_row(std::vector<std::string> row);
};

std::string format_number(double v);

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);
std::string to_csv_text(const CsvTable& table);

}  // namespace armswing
