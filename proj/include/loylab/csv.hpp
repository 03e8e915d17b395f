#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace loylab {

// Round-trip precision; all CSV numerics go through here so identical runs
// produce identical bytes.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
  }

  void comment(const std::string& key, const std::string& value) {
    out_ << "# " << key << "=" << value << "\n";
  }
  void comment(const std::string& key, double value) {
    comment(key, fmt17(value));
  }

  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      out_ << cells[i];
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace loylab
