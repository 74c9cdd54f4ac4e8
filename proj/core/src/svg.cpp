#include "perplex/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "perplex/numfmt.hpp"

namespace perplex {

namespace {

constexpr double kWidth = 720.0;
constexpr double kChartHeight = 380.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  std::array<char, 32> buf{};
  const int len = std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return std::string(buf.data(), static_cast<std::size_t>(len));
}

std::string tick_label(double v) {
  std::array<char, 32> buf{};
  const int len = std::snprintf(buf.data(), buf.size(), "%.3g", v);
  return std::string(buf.data(), static_cast<std::size_t>(len));
}

std::string escape(const std::string& text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

void render_chart(std::string& out, const LineChart& chart, double y0) {
  Range xr;
  Range yr;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xr.add(x);
      yr.add(y);
    }
  }
  xr.pad();
  yr.pad();

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kChartHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) { return y0 + kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * plot_h; };

  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(y0 + 24) +
         "\" text-anchor=\"middle\" font-size=\"15\">" + escape(chart.title) + "</text>\n";
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(y0 + kTop) + "\" width=\"" + num(plot_w) +
         "\" height=\"" + num(plot_h) + "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(y0 + kTop + plot_h + 18) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + tick_label(fx) + "</text>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(fy) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + tick_label(fy) + "</text>\n";
    out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" + num(kLeft + plot_w) +
           "\" y2=\"" + num(py(fy)) + "\" stroke=\"#ddd\"/>\n";
  }
  out += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(y0 + kChartHeight - 14) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + escape(chart.x_label) + "</text>\n";
  const double ylab_y = y0 + kTop + plot_h / 2;
  out += "<text x=\"18\" y=\"" + num(ylab_y) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " +
         num(ylab_y) + ")\">" + escape(chart.y_label) + "</text>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const char* color = kPalette[s % kPalette.size()];
    std::string pts;
    for (const auto& [x, y] : series.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(x)) + "," + num(py(y));
      out += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    if (!pts.empty()) {
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
             pts + "\"/>\n";
    }
    const double ly = y0 + kTop + 14 + 18.0 * static_cast<double>(s);
    const double lx = kWidth - kRight + 14;
    out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly + 4) + "\" font-size=\"11\">" +
           escape(series.name) + "</text>\n";
  }
}

}  // namespace

std::string render_svg(std::span<const LineChart> charts) {
  const double height = kChartHeight * static_cast<double>(std::max<std::size_t>(charts.size(), 1));
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\" font-family=\"sans-serif\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < charts.size(); ++i) {
    render_chart(out, charts[i], kChartHeight * static_cast<double>(i));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace perplex
