#include "dvtk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "dvtk/errors.hpp"

namespace dvtk {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Dark blue -> yellow ramp for heat maps.
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(20 + t * (250 - 20));
  const int g = static_cast<int>(30 + t * (220 - 30));
  const int b = static_cast<int>(90 + (1.0 - t) * (160 - 90));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

SvgPlot::SvgPlot(double width, double height) : width_(width), height_(height) {}

void SvgPlot::set_title(const std::string& title) { title_ = title; }

void SvgPlot::set_axis_labels(const std::string& x_label, const std::string& y_label) {
  x_label_ = x_label;
  y_label_ = y_label;
}

void SvgPlot::add_line(const std::vector<double>& x, const std::vector<double>& y,
                       const std::string& color) {
  series_.push_back({x, y, color});
}

void SvgPlot::add_heatmap(const std::vector<std::vector<double>>& values, double x0, double x1,
                          double y0, double y1) {
  heat_ = values;
  hx0_ = x0; hx1_ = x1; hy0_ = y0; hy1_ = y1;
}

void SvgPlot::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot open '" + path + "' for writing");
  }
  const double ml = 60, mr = 20, mt = 30, mb = 45;  // margins
  const double pw = width_ - ml - mr;
  const double ph = height_ - mt - mb;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const Series& s : series_) {
    for (double v : s.x) { x_min = std::min(x_min, v); x_max = std::max(x_max, v); }
    for (double v : s.y) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
  }
  if (!heat_.empty()) {
    x_min = std::min(x_min, hx0_); x_max = std::max(x_max, hx1_);
    y_min = std::min(y_min, hy0_); y_max = std::max(y_max, hy1_);
  }
  if (!(x_max > x_min)) { x_min -= 0.5; x_max += 0.5; }
  if (!(y_max > y_min)) { y_min -= 0.5; y_max += 0.5; }

  auto px = [&](double x) { return ml + pw * (x - x_min) / (x_max - x_min); };
  auto py = [&](double y) { return mt + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_)
      << "\" height=\"" << num(height_) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  if (!heat_.empty()) {
    double v_lo = std::numeric_limits<double>::infinity(), v_hi = -v_lo;
    for (const auto& row : heat_) {
      for (double v : row) { v_lo = std::min(v_lo, v); v_hi = std::max(v_hi, v); }
    }
    if (!(v_hi > v_lo)) v_hi = v_lo + 1.0;
    const std::size_t nrows = heat_.size();
    for (std::size_t r = 0; r < nrows; ++r) {
      const std::size_t ncols = heat_[r].size();
      const double ry0 = hy0_ + (hy1_ - hy0_) * static_cast<double>(r) / nrows;
      const double ry1 = hy0_ + (hy1_ - hy0_) * static_cast<double>(r + 1) / nrows;
      for (std::size_t c = 0; c < ncols; ++c) {
        const double rx0 = hx0_ + (hx1_ - hx0_) * static_cast<double>(c) / ncols;
        const double rx1 = hx0_ + (hx1_ - hx0_) * static_cast<double>(c + 1) / ncols;
        const double t = (heat_[r][c] - v_lo) / (v_hi - v_lo);
        out << "<rect x=\"" << num(px(rx0)) << "\" y=\"" << num(py(ry1)) << "\" width=\""
            << num(px(rx1) - px(rx0) + 0.5) << "\" height=\"" << num(py(ry0) - py(ry1) + 0.5)
            << "\" fill=\"" << ramp(t) << "\"/>\n";
      }
    }
  }

  for (const Series& s : series_) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      out << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
    }
    out << "\"/>\n";
  }

  // Frame and labels.
  out << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(ml) << "\" y=\"" << num(mt - 10) << "\" font-size=\"13\">"
      << title_ << "</text>\n";
  out << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(height_ - 10)
      << "\" font-size=\"11\" text-anchor=\"middle\">" << x_label_ << "</text>\n";
  out << "<text x=\"15\" y=\"" << num(mt + ph / 2)
      << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << num(mt + ph / 2) << ")\">" << y_label_ << "</text>\n";
  // Axis extent ticks.
  out << "<text x=\"" << num(ml) << "\" y=\"" << num(height_ - mb + 15)
      << "\" font-size=\"10\">" << num(x_min) << "</text>\n";
  out << "<text x=\"" << num(width_ - mr) << "\" y=\"" << num(height_ - mb + 15)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(x_max) << "</text>\n";
  out << "<text x=\"" << num(ml - 5) << "\" y=\"" << num(height_ - mb)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(y_min) << "</text>\n";
  out << "<text x=\"" << num(ml - 5) << "\" y=\"" << num(mt + 10)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(y_max) << "</text>\n";
  out << "</svg>\n";
}

}  // namespace dvtk
