#pragma once

// CSV tables with round-trip number formatting and atomic JSON writes.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kplab/errors.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

using Json = nlohmann::ordered_json;

/// Shortest form that reads back to the same double; inf/nan spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

class CsvCell {
 public:
  CsvCell(double v) : text_(format_double(v)) {}
  CsvCell(int v) : text_(std::to_string(v)) {}
  CsvCell(long v) : text_(std::to_string(v)) {}
  CsvCell(std::size_t v) : text_(std::to_string(v)) {}
  CsvCell(const char* s) : text_(s) {}
  CsvCell(std::string s) : text_(std::move(s)) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Header line, then comma-separated rows; '\n' line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
    if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
    line(header.begin(), header.end(), [](const std::string& s) -> const std::string& { return s; });
  }

  void row(std::initializer_list<CsvCell> cells) {
    if (cells.size() != width_) throw DomainError("CsvWriter: row width does not match header");
    line(cells.begin(), cells.end(), [](const CsvCell& c) -> const std::string& { return c.text(); });
  }

  void close() {
    out_.close();
    if (!out_) throw ConfigError("failed writing " + path_.string());
  }

 private:
  template <class It, class Get>
  void line(It first, It last, Get get) {
    for (It it = first; it != last; ++it) {
      if (it != first) out_ << ',';
      out_ << get(*it);
    }
    out_ << '\n';
  }

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

/// One row per (t, k, l) with the real and imaginary parts of the coefficient.
inline void write_spectrum_series(const std::filesystem::path& path, const std::vector<double>& times,
                                  const std::vector<Spectrum2D>& states) {
  CsvWriter w(path, {"t", "k", "l", "re", "im"});
  for (std::size_t j = 0; j < times.size(); ++j) {
    const auto& u = states[j];
    for (int i = 0; i < u.grid.size(); ++i) {
      const auto [k, l] = u.grid.mode(i);
      w.row({times[j], k, l, u.coeffs[i].real(), u.coeffs[i].imag()});
    }
  }
  w.close();
}

/// Writes to path.tmp and renames over path.
inline void write_json_atomic(const std::filesystem::path& path, const Json& doc) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open " + tmp.string() + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw ConfigError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// JSON numbers cannot hold inf or nan; those become strings.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline Json json_numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

}  // namespace kplab
