#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "selbench/dataset.hpp"
#include "selbench/errors.hpp"

namespace selbench {

// Shortest exact decimal representation of v (round-trips bit-identically).
inline std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// Reads a UTF-8 CSV with a mandatory header row into a Dataset. One column
// holds the class labels, addressed by header name or, failing that, by
// 0-based column index. Every other cell must parse as a finite real with a
// decimal point (no locale-dependent separators); offending cells are
// reported by data row and column name.
inline Dataset ingest_csv(const std::string& path, const std::string& label_column,
                          char delimiter = ',') {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file (header row required)");
  std::vector<std::string> header = detail::split_line(line, delimiter);
  for (auto& h : header) h = detail::trim(h);

  std::size_t label_idx = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_column) label_idx = j;
  if (label_idx == header.size()) {
    int idx = -1;
    auto [ptr, ec] = std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
    if (ec == std::errc() && ptr == label_column.data() + label_column.size() && idx >= 0 &&
        static_cast<std::size_t>(idx) < header.size()) {
      label_idx = static_cast<std::size_t>(idx);
    } else {
      throw DataError(path + ": label column '" + label_column + "' not found");
    }
  }
  if (header.size() < 2) throw DataError(path + ": need at least one feature column");

  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != label_idx) feature_names.push_back(header[j]);

  std::vector<std::vector<double>> columns(feature_names.size());
  std::vector<std::string> raw_labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty() && in.peek() == EOF) break;  // trailing newline
    ++row;
    std::vector<std::string> cells = detail::split_line(line, delimiter);
    if (cells.size() != header.size())
      throw DataError(path + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    std::size_t feat = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string cell = detail::trim(cells[j]);
      if (j == label_idx) {
        if (cell.empty())
          throw DataError(path + ": row " + std::to_string(row) + ": empty label");
        raw_labels.push_back(cell);
        continue;
      }
      const auto fail = [&](const char* what) {
        return DataError(path + ": row " + std::to_string(row) + ", column '" + header[j] +
                         "': " + what + " ('" + cell + "')");
      };
      if (cell.empty()) throw fail("missing value");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) throw fail("not a number");
      if (!std::isfinite(v)) throw fail("non-finite value");
      columns[feat++].push_back(v);
    }
  }
  if (row < 2) throw DataError(path + ": need at least 2 data rows");
  return make_dataset(std::move(columns), raw_labels, std::move(feature_names));
}

// Writes a dataset with the label column last; values round-trip exactly.
inline void write_csv(const Dataset& d, const std::string& path,
                      const std::string& label_name = "class", char delimiter = ',') {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& name : d.feature_names) out << name << delimiter;
  out << label_name << '\n';
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t j = 0; j < d.n_features(); ++j)
      out << format_double(d.columns[j][i]) << delimiter;
    out << d.class_names[d.labels[i]] << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace selbench
