// Minimal standalone SVG line plots.  Plots are a convenience output; the
// CSV files are the interface of record, so this stays deliberately small:
// linear or log10 x axis, auto-scaled y, fixed tick count, polyline series.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace svgplot {

struct Series {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  std::string label;
};

class Plot {
 public:
  Plot(std::string title, std::string x_label, std::string y_label,
       bool log_x = false)
      : title_(std::move(title)),
        x_label_(std::move(x_label)),
        y_label_(std::move(y_label)),
        log_x_(log_x) {}

  void add_series(Series s) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("svgplot: x/y size mismatch");
    series_.push_back(std::move(s));
  }

  // Optional reference markers (e.g. detected peaks), drawn as circles.
  void add_marker(double x, double y, const std::string& color) {
    markers_.push_back({x, y, color});
  }

  std::string render() const;

 private:
  struct Marker {
    double x, y;
    std::string color;
  };

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  }

  double tx(double x) const { return log_x_ ? std::log10(x) : x; }

  std::string title_, x_label_, y_label_;
  bool log_x_;
  std::vector<Series> series_;
  std::vector<Marker> markers_;
};

inline std::string Plot::render() const {
  const double width = 800, height = 520;
  const double ml = 80, mr = 20, mt = 40, mb = 60;  // margins
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series_) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double x = tx(s.x[i]);
      const double y = s.y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      } else {
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    }
  }
  if (x_max - x_min < 1e-300) x_max = x_min + 1;
  if (y_max - y_min < 1e-300) y_max = y_min + 1;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double x) { return ml + (tx(x) - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - y_min) / (y_max - y_min)) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
         "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
         num(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(width / 2) + "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + title_ + "</text>\n";

  // Frame
  out += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks: 6 per axis; log axis labels show the decade value.
  for (int i = 0; i <= 5; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    const double gx = ml + pw * i / 5.0;
    out += "<line x1=\"" + num(gx) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" +
           num(gx) + "\" y2=\"" + num(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(gx) + "\" y=\"" + num(mt + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + num(log_x_ ? std::pow(10.0, fx) : fx) +
           "</text>\n";

    const double fy = y_min + (y_max - y_min) * i / 5.0;
    const double gy = mt + ph * (1.0 - i / 5.0);
    out += "<line x1=\"" + num(ml - 5) + "\" y1=\"" + num(gy) + "\" x2=\"" +
           num(ml) + "\" y2=\"" + num(gy) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(gy + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" + num(fy) + "</text>\n";
  }

  out += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(height - 15) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">" + x_label_ + "</text>\n";
  out += "<text x=\"18\" y=\"" + num(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " + num(mt + ph / 2) + ")\">" + y_label_ +
         "</text>\n";

  for (const auto& s : series_) {
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(tx(s.x[i])) || !std::isfinite(s.y[i])) continue;
      pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
  }

  for (const auto& m : markers_)
    out += "<circle cx=\"" + num(px(m.x)) + "\" cy=\"" + num(py(m.y)) +
           "\" r=\"4\" fill=\"none\" stroke=\"" + m.color +
           "\" stroke-width=\"1.5\"/>\n";

  // Legend (top-right corner, only when labels are present)
  double ly = mt + 14;
  for (const auto& s : series_) {
    if (s.label.empty()) continue;
    out += "<line x1=\"" + num(ml + pw - 150) + "\" y1=\"" + num(ly - 4) +
           "\" x2=\"" + num(ml + pw - 125) + "\" y2=\"" + num(ly - 4) +
           "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(ml + pw - 120) + "\" y=\"" + num(ly) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label +
           "</text>\n";
    ly += 16;
  }

  out += "</svg>\n";
  return out;
}

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> colors = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors;
}

}  // namespace svgplot
