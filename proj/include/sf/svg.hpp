#pragma once

#include <string>
#include <vector>

namespace sf::svg {

struct Series {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::string color;  // empty: palette by position
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  // Fixed y range when y_min < y_max; otherwise fitted to the data.
  double y_min = 0.0;
  double y_max = 0.0;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Byte-for-byte deterministic for equal inputs.
std::string render_chart(const Chart& chart);
/// Title, then the table, then the charts stacked vertically.
std::string render_report(const std::string& title, const Table& table,
                          const std::vector<Chart>& charts);

/// #rrggbb on a blue-to-red ramp, t in [0, 1].
std::string ramp_color(double t);

}  // namespace sf::svg
