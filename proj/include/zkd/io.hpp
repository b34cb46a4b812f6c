// SPDX-License-Identifier: Apache-2.0
//
// Text serialization helpers shared by checkpoints, datasets and reports.
// JSON floats are written with 17 significant digits (trailing zeros kept) so
// every double survives a write/read cycle bit-exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "zkd/errors.hpp"

namespace zkd::io {

using Json = nlohmann::json;

/// Shortest "%.17g" rendering; round-trips exactly through strtod.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Always 17 significant digits, always with a '.' or exponent so the value
/// parses back as a float.
inline std::string format_json_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%#.17g", x);
  return buf;
}

namespace detail {

inline void dump(const Json& j, std::string& out, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) {
        return e.is_structured();
      });
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat && indent >= 0 ? ", " : ",";
        if (!flat) newline(depth + 1);
        dump(j[i], out, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      out += format_json_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

inline std::string dump_json(const Json& j, int indent = 2) {
  std::string out;
  detail::dump(j, out, indent, 0);
  out += '\n';
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

/// Comma-joined rows; every row must have the header's column count.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    add_row_text(header);
  }

  void add_row_text(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw ShapeError("CSV row has wrong column count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  const std::string& str() const noexcept { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

}  // namespace zkd::io
