#pragma once

#include <string>
#include <vector>

namespace armswing::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
  // Optional shaded band (same length as x), e.g. mean +- std.
  std::vector<double> lower, upper;
};

struct LinePlot {
  std::string title, x_label, y_label;
  std::vector<Series> series;
};

struct ViolinGroup {
  std::string name;
  std::vector<double> samples;
};

struct ViolinPlot {
  std::string title, y_label;
  std::vector<ViolinGroup> groups;
};

/// Pass/fail grid, cells indexed [iy][ix].
struct RegionPanel {
  std::string name;
  std::vector<double> x, y;
  std::vector<std::vector<bool>> success;
};

struct RegionPlot {
  std::string title, x_label, y_label;
  std::vector<RegionPanel> panels;
};

std::string render(const LinePlot& plot);
std::string render(const ViolinPlot& plot);
std::string render(const RegionPlot& plot);

void write(const std::string& path, const std::string& document);

}  // namespace armswing::svg
