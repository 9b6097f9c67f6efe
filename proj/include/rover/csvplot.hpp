#pragma once

#include <string>
#include <vector>

namespace rover {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  /// Numeric column; non-numeric cells (nan, empty) become NaN.
  std::vector<double> numeric(int col) const;
};

CsvTable read_csv(const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Static SVG line plot with axes, ticks and a legend. NaN samples break the
/// polyline.
void write_line_plot_svg(const std::string& path, const std::vector<PlotSeries>& series,
                         const std::string& title, const std::string& x_label,
                         const std::string& y_label);

}  // namespace rover
