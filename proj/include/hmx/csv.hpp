#pragma once
//
// CSV emission with '#'-prefixed comment headers. Every experiment file
// records seed and configuration so identical configs reproduce identical
// value columns.
//

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmx {

inline constexpr const char* kArtifactVersion = "0.1.0";

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(const std::string& path) : os_(path) {
    if (!os_) throw std::runtime_error("cannot open for writing: " + path);
  }

  void comment(const std::string& text) { os_ << "# " << text << '\n'; }

  void header(const std::vector<std::string>& cols) { emit(cols); }

  void row(const std::vector<std::string>& cols) { emit(cols); }

private:
  void emit(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) os_ << ',';
      os_ << cols[i];
    }
    os_ << '\n';
  }

  std::ofstream os_;
};

} // namespace hmx
