#pragma once

#include <string>
#include <vector>

namespace dvtk {

// Minimal native SVG plotting: line traces and heat maps, enough to look at
// sweep results without external tooling. Output is deterministic.
class SvgPlot {
 public:
  SvgPlot(double width = 640.0, double height = 480.0);

  void set_title(const std::string& title);
  void set_axis_labels(const std::string& x_label, const std::string& y_label);

  // Line trace over (x, y) samples; call once per series.
  void add_line(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& color = "#1f6fb4");

  // Row-major heat map: values[row][col]; rows map to y, cols to x.
  void add_heatmap(const std::vector<std::vector<double>>& values, double x0, double x1,
                   double y0, double y1);

  void write(const std::string& path) const;

 private:
  struct Series {
    std::vector<double> x, y;
    std::string color;
  };
  double width_, height_;
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<std::vector<double>> heat_;
  double hx0_ = 0, hx1_ = 1, hy0_ = 0, hy1_ = 1;
};

}  // namespace dvtk
