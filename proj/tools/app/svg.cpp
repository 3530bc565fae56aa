#include "svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace refscore::app {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 80.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  double map(double v, double pixel_lo, double pixel_hi) const {
    return pixel_lo + (v - lo) / (hi - lo) * (pixel_hi - pixel_lo);
  }
};

Axis padded(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

std::string header(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
      "font-family=\"DejaVu Sans, Arial, sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2.0, escape(title));
}

std::string y_axis(const Axis& y, const std::string& label) {
  std::string out;
  const double bottom = kHeight - kBottom;
  out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", kLeft,
                     kTop, bottom);
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y.map(v, bottom, kTop);
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#dddddd\"/>\n"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.3g}</text>\n",
        kLeft, py, kWidth - kRight, kLeft - 6.0, py + 4.0, v);
  }
  out += fmt::format(
      "<text x=\"16\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.2f})\">{1}</text>\n",
      (kTop + bottom) / 2.0, escape(label));
  return out;
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars) {
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min({lo, b.value, b.low});
    hi = std::max({hi, b.value, b.high});
  }
  const Axis y = padded(lo, hi);
  const double bottom = kHeight - kBottom;
  std::string out = header(title) + y_axis(y, y_label);
  const double zero = y.map(0.0, bottom, kTop);
  out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", kLeft,
                     zero, kWidth - kRight);
  const double slot = bars.empty() ? 0.0 : (kWidth - kLeft - kRight) / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
    const double w = slot * 0.7;
    const double top = y.map(std::max(b.value, 0.0), bottom, kTop);
    const double base = y.map(std::min(b.value, 0.0), bottom, kTop);
    out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x, top, w,
                       base - top, b.value >= 0.0 ? kPalette[0] : kPalette[1]);
    if (b.high > b.low) {
      const double cx = x + w / 2.0;
      out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                         y.map(b.low, bottom, kTop), y.map(b.high, bottom, kTop));
    }
    const double lx = x + w / 2.0;
    const double ly = bottom + 12.0;
    out += fmt::format(
        "<text x=\"{0:.2f}\" y=\"{1:.2f}\" text-anchor=\"end\" font-size=\"10\" transform=\"rotate(-45 {0:.2f} "
        "{1:.2f})\">{2}</text>\n",
        lx, ly, escape(b.label));
  }
  out += "</svg>\n";
  return out;
}

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
  double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [px, py] : s.points) {
      if (first) {
        xlo = xhi = px;
        ylo = yhi = py;
        first = false;
      }
      xlo = std::min(xlo, px);
      xhi = std::max(xhi, px);
      ylo = std::min(ylo, py);
      yhi = std::max(yhi, py);
    }
  const Axis x = padded(xlo, xhi);
  const Axis y = padded(ylo, yhi);
  const double bottom = kHeight - kBottom;
  const double right = kWidth - kRight;
  std::string out = header(title) + y_axis(y, y_label);
  out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", kLeft,
                     bottom, right);
  for (int i = 0; i <= 4; ++i) {
    const double v = x.lo + (x.hi - x.lo) * i / 4.0;
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4g}</text>\n", x.map(v, kLeft, right),
                       bottom + 16.0, v);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (kLeft + right) / 2.0,
                     bottom + 36.0, escape(x_label));
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const auto& [px, py] : series[i].points)
      points += fmt::format("{}{:.2f},{:.2f}", points.empty() ? "" : " ", x.map(px, kLeft, right), y.map(py, bottom, kTop));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour, points);
    const double ly = kHeight - 14.0;
    const double lx = kLeft + 110.0 * static_cast<double>(i % 6);
    out += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n"
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\">{}</text>\n",
        lx, ly - 9.0, colour, lx + 14.0, ly, escape(series[i].name));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace refscore::app
