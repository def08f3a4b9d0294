#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace dvtk {

// Deterministic CSV writer: fixed "%.9g" number formatting, '#' header
// comment lines for units and provenance, one column row, then data.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void comment(const std::string& text);
  void columns(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  void raw_row(const std::vector<std::string>& cells);

  static std::string format_number(double v);

 private:
  std::ofstream out_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Reads a CSV written by CsvWriter or any plain numeric CSV; '#' lines and a
// non-numeric first row are treated as header.
CsvTable read_csv(const std::string& path);

}  // namespace dvtk
