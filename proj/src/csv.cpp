#include "dvtk/csv.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "dvtk/errors.hpp"

namespace dvtk {

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
  if (!out_) {
    throw ConfigError("cannot open '" + path + "' for writing");
  }
}

std::string CsvWriter::format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void CsvWriter::comment(const std::string& text) {
  out_ << "# " << text << "\n";
}

void CsvWriter::columns(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    out_ << (i ? "," : "") << names[i];
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out_ << (i ? "," : "") << format_number(values[i]);
  }
  out_ << "\n";
}

void CsvWriter::raw_row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out_ << (i ? "," : "") << cells[i];
  }
  out_ << "\n";
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open '" + path + "'");
  }
  CsvTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.empty()) continue;

    std::vector<double> values;
    bool numeric = true;
    for (const std::string& c : cells) {
      try {
        std::size_t pos = 0;
        values.push_back(std::stod(c, &pos));
        while (pos < c.size() && std::isspace(static_cast<unsigned char>(c[pos]))) ++pos;
        if (pos != c.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (numeric) {
      table.rows.push_back(std::move(values));
    } else if (table.columns.empty() && table.rows.empty()) {
      table.columns = std::move(cells);
    } else {
      throw ConfigError("non-numeric row in '" + path + "'");
    }
  }
  return table;
}

}  // namespace dvtk
