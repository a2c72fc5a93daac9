#include "sf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sf::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kChartHeight = 320.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 150.0;
constexpr double kTop = 36.0;
constexpr double kBottom = 44.0;
constexpr double kRowHeight = 18.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string text(double x, double y, const std::string& s, const char* anchor = "start",
                 int size = 11) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

// Body of one chart whose top-left corner sits at (0, y0).
std::string chart_body(const Chart& chart, double y0) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  for (const auto& s : chart.series)
    for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (chart.y_min < chart.y_max) ymin = chart.y_min, ymax = chart.y_max;
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kChartHeight - kTop - kBottom;
  const double top = y0 + kTop;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::string out;
  out += text(kWidth / 2, y0 + 20, chart.title, "middle", 13);
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    out += text(px(fx), top + ph + 14, tick(fx), "middle", 10);
    out += text(kLeft - 4, py(fy) + 3, tick(fy), "end", 10);
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" + num(kLeft + pw) +
           "\" y2=\"" + num(py(fy)) + "\" stroke=\"#ddd\"/>\n";
  }
  out += text(kLeft + pw / 2, top + ph + 32, chart.x_label, "middle");
  out += "<text x=\"14\" y=\"" + num(top + ph / 2) + "\" font-size=\"11\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 14 " + num(top + ph / 2) + ")\">" + escape(chart.y_label) +
         "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const std::string color = s.color.empty() ? kPalette[k % 8] : s.color;
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.xs.size(), s.ys.size()); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(s.xs[i])) + "," + num(py(std::clamp(s.ys[i], ymin, ymax)));
    }
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + pts +
           "\"/>\n";
    const double ly = top + 10 + 14.0 * static_cast<double>(k);
    if (ly > top + ph) continue;  // legend overflow: the curves are still drawn
    out += "<line x1=\"" + num(kLeft + pw + 8) + "\" y1=\"" + num(ly - 3) + "\" x2=\"" +
           num(kLeft + pw + 24) + "\" y2=\"" + num(ly - 3) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += text(kLeft + pw + 28, ly, s.label, "start", 10);
  }
  return out;
}

std::string open(double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string render_chart(const Chart& chart) {
  return open(kChartHeight) + chart_body(chart, 0.0) + "</svg>\n";
}

std::string render_report(const std::string& title, const Table& table,
                          const std::vector<Chart>& charts) {
  const double table_top = 40.0;
  const double table_h = kRowHeight * static_cast<double>(table.rows.size() + 1) + 16.0;
  const double height = table_top + table_h + kChartHeight * static_cast<double>(charts.size());
  std::string out = open(height);
  out += text(kWidth / 2, 24, title, "middle", 15);

  const std::size_t cols = table.header.size();
  const double colw = cols == 0 ? kWidth : (kWidth - 20.0) / static_cast<double>(cols);
  auto row = [&](const std::vector<std::string>& cells, double y, bool bold) {
    std::string r;
    for (std::size_t c = 0; c < std::min(cells.size(), cols); ++c) {
      std::string t = text(10 + colw * static_cast<double>(c), y, cells[c], "start", 10);
      if (bold) t.insert(5, " font-weight=\"bold\"");
      r += t;
    }
    return r;
  };
  double y = table_top + kRowHeight;
  out += row(table.header, y, true);
  out += "<line x1=\"10\" y1=\"" + num(y + 5) + "\" x2=\"" + num(kWidth - 10) + "\" y2=\"" +
         num(y + 5) + "\" stroke=\"#444\"/>\n";
  for (const auto& r : table.rows) {
    y += kRowHeight;
    out += row(r, y, false);
  }

  double y0 = table_top + table_h;
  for (const auto& chart : charts) {
    out += chart_body(chart, y0);
    y0 += kChartHeight;
  }
  return out + "</svg>\n";
}

std::string ramp_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(31 + (214 - 31) * t));
  const int g = static_cast<int>(std::lround(119 + (39 - 119) * t));
  const int b = static_cast<int>(std::lround(180 + (40 - 180) * t));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace sf::svg
