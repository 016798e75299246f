#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace blackstock {

// Fixed "%.12g" keeps reruns byte-identical regardless of locale or stdlib
// formatting differences.
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class csv_writer {
 public:
  csv_writer(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("csv_writer: cannot open " + path);
    write_cells(header);
  }

  void row(const std::vector<std::string>& cells) { write_cells(cells); }

  void row_num(const std::vector<double>& vals) {
    std::vector<std::string> cells;
    cells.reserve(vals.size());
    for (double v : vals) cells.push_back(fmt_num(v));
    write_cells(cells);
  }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }
  std::ofstream out_;
};

}  // namespace blackstock
