#include "armswing/csv.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace armswing {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

int CsvTable::column_index(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  // Allow lookups without the bracketed unit suffix.
  for (size_t i = 0; i < header.size(); ++i) {
    const auto b = header[i].find('[');
    if (b != std::string::npos && header[i].substr(0, b) == name) return static_cast<int>(i);
  }
  throw std::out_of_range("csv column '" + name + "' not found");
}

std::vector<std::string> CsvTable::text_column(const std::string& name) const {
  const auto c = static_cast<size_t>(column_index(name));
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(c < r.size() ? r[c] : "");
  return out;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  std::vector<double> out;
  for (const auto& s : text_column(name)) {
    out.push_back(s == "nan" || s.empty() ? std::nan("") : std::stod(s));
  }
  return out;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw std::invalid_argument("csv row has " + std::to_string(row.size()) + " cells, header has " +
                                std::to_string(header.size()));
  }
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}

std::string to_csv_text(const CsvTable& t) {
  std::ostringstream o;
  auto line = [&o](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) o << (i ? "," : "") << cells[i];
    o << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return o.str();
}

void write_csv(const std::string& path, const CsvTable& t) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_csv_text(t);
  if (!f) throw std::runtime_error("write failed for " + path);
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      t.header = split(line);
      first = false;
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return parse_csv(s.str());
}

}  // namespace armswing
