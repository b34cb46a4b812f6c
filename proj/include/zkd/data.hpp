// SPDX-License-Identifier: Apache-2.0
//
// Synthetic classification data and CSV tables ("f1,...,fD,label", 0-based
// labels).
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zkd/errors.hpp"
#include "zkd/io.hpp"
#include "zkd/rng.hpp"

namespace zkd {

/// N x D features (row-major) with labels in [0, K).
class Dataset {
 public:
  Dataset(std::size_t num_classes, std::size_t dim, std::vector<double> features,
          std::vector<std::size_t> labels)
      : K_(num_classes), D_(dim), features_(std::move(features)),
        labels_(std::move(labels)) {
    if (D_ == 0) throw InvalidParameter("dataset dimension must be positive");
    if (labels_.empty()) throw InvalidParameter("dataset needs at least one sample");
    if (features_.size() != labels_.size() * D_) {
      throw ShapeError("feature matrix does not match N x D");
    }
    for (std::size_t y : labels_) {
      if (y >= K_) throw InvalidParameter("label outside [0, K)");
    }
    for (double x : features_) {
      if (!std::isfinite(x)) throw InvalidParameter("non-finite feature");
    }
  }

  std::size_t num_classes() const noexcept { return K_; }
  std::size_t dim() const noexcept { return D_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::span<const double> row(std::size_t n) const {
    return std::span<const double>(features_).subspan(n * D_, D_);
  }
  std::size_t label(std::size_t n) const { return labels_[n]; }
  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(K_, 0);
    for (std::size_t y : labels_) ++counts[y];
    return counts;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t K_;
  std::size_t D_;
  std::vector<double> features_;
  std::vector<std::size_t> labels_;
};

struct Split {
  Dataset train;
  Dataset test;
};

enum class Generator { GaussianBlobs, Spirals };

inline std::string to_string(Generator g) {
  return g == Generator::GaussianBlobs ? "gaussian_blobs" : "spirals";
}

inline Generator generator_from_string(const std::string& s) {
  if (s == "gaussian_blobs") return Generator::GaussianBlobs;
  if (s == "spirals") return Generator::Spirals;
  throw InvalidParameter("unknown generator '" + s +
                         "' (expected gaussian_blobs or spirals)");
}

struct DataSpec {
  Generator generator = Generator::GaussianBlobs;
  std::size_t K = 10;
  std::size_t D = 10;
  std::size_t N = 2000;
  double class_separation = 3.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (K < 2) throw InvalidParameter("K must be >= 2");
    if (D < 1) throw InvalidParameter("D must be >= 1");
    if (N < K) throw InvalidParameter("N must be >= K");
    if (!(class_separation > 0.0) || !std::isfinite(class_separation)) {
      throw InvalidParameter("class_separation must be > 0");
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
      throw InvalidParameter("noise_std must be >= 0");
    }
    if (generator == Generator::Spirals && D != 2) {
      throw InvalidParameter("spirals generator requires D = 2");
    }
  }
};

/// Blob centres. D >= K: class_separation * e_k. 2 <= D < K: K points on a
/// circle of radius class_separation in the first two coordinates. D == 1:
/// points spaced class_separation apart, centred on 0.
inline std::vector<double> blob_means(const DataSpec& spec) {
  std::vector<double> means(spec.K * spec.D, 0.0);
  for (std::size_t k = 0; k < spec.K; ++k) {
    double* m = &means[k * spec.D];
    if (spec.D >= spec.K) {
      m[k] = spec.class_separation;
    } else if (spec.D >= 2) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(spec.K);
      m[0] = spec.class_separation * std::cos(angle);
      m[1] = spec.class_separation * std::sin(angle);
    } else {
      m[0] = spec.class_separation *
             (static_cast<double>(k) - 0.5 * static_cast<double>(spec.K - 1));
    }
  }
  return means;
}

/// Sample n gets label n mod K. Within each class every fifth sample goes to
/// the test split, the rest to train, so both splits are stratified.
inline Split generate(const DataSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::vector<double> means =
      spec.generator == Generator::GaussianBlobs ? blob_means(spec) : std::vector<double>{};

  std::vector<double> train_x, test_x;
  std::vector<std::size_t> train_y, test_y;
  std::vector<std::size_t> seen(spec.K, 0);
  std::vector<double> x(spec.D);
  for (std::size_t n = 0; n < spec.N; ++n) {
    const std::size_t y = n % spec.K;
    if (spec.generator == Generator::GaussianBlobs) {
      for (std::size_t d = 0; d < spec.D; ++d) {
        x[d] = means[y * spec.D + d] + spec.noise_std * rng.normal();
      }
    } else {
      // Arm y: radius grows from 0.2 to 1.2 separations over 7/8 of a turn.
      const double t = rng.uniform();
      const double r = spec.class_separation * (0.2 + t);
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(y) /
                               static_cast<double>(spec.K) +
                           1.75 * std::numbers::pi * t;
      x[0] = r * std::cos(angle) + spec.noise_std * rng.normal();
      x[1] = r * std::sin(angle) + spec.noise_std * rng.normal();
    }
    const bool to_test = seen[y]++ % 5 == 4;
    auto& dst_x = to_test ? test_x : train_x;
    auto& dst_y = to_test ? test_y : train_y;
    dst_x.insert(dst_x.end(), x.begin(), x.end());
    dst_y.push_back(y);
  }
  if (test_y.empty()) {
    throw InvalidParameter("N too small for a non-empty test split (need N > 4K)");
  }
  return {Dataset(spec.K, spec.D, std::move(train_x), std::move(train_y)),
          Dataset(spec.K, spec.D, std::move(test_x), std::move(test_y))};
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

/// Parses CSV text. A first row with any non-numeric cell is a header.
/// K is inferred as max label + 1.
inline Dataset parse_csv(std::string_view text) {
  std::vector<double> features;
  std::vector<std::size_t> labels;
  std::size_t columns = 0;
  std::size_t row = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = detail::trim(text.substr(start, end - start));
    start = end + 1;
    ++row;
    if (line.empty()) continue;

    const auto cells = detail::split_commas(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      numeric = numeric && detail::parse_number(cells[i], values[i]);
    }
    if (row == 1 && !numeric) {
      columns = cells.size();  // header
      continue;
    }
    if (columns == 0) columns = cells.size();
    if (columns < 2) throw ParseError(row, "need at least one feature and a label");
    if (cells.size() != columns) {
      throw ParseError(row, "expected " + std::to_string(columns) + " columns, got " +
                                std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
      if (!detail::parse_number(cells[i], values[i]) || !std::isfinite(values[i])) {
        throw ParseError(row, "feature " + std::to_string(i + 1) + " is not a finite number");
      }
    }
    double label = 0.0;
    if (!detail::parse_number(cells.back(), label) || !std::isfinite(label) ||
        label != std::floor(label)) {
      throw ParseError(row, "label is not an integer");
    }
    if (label < 0.0) throw ParseError(row, "negative label");
    features.insert(features.end(), values.begin(), values.end() - 1);
    labels.push_back(static_cast<std::size_t>(label));
  }
  if (labels.empty()) throw ParseError(row, "no data rows");
  const std::size_t K = *std::max_element(labels.begin(), labels.end()) + 1;
  return Dataset(K, columns - 1, std::move(features), std::move(labels));
}

inline Dataset load_csv(const std::filesystem::path& path) {
  return parse_csv(io::read_file(path));
}

inline std::string to_csv(const Dataset& data) {
  std::vector<std::string> header;
  for (std::size_t d = 0; d < data.dim(); ++d) header.push_back("f" + std::to_string(d + 1));
  header.push_back("label");
  io::CsvWriter w(std::move(header));
  std::vector<std::string> cells(data.dim() + 1);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto x = data.row(n);
    for (std::size_t d = 0; d < data.dim(); ++d) cells[d] = io::format_double(x[d]);
    cells.back() = std::to_string(data.label(n));
    w.add_row_text(cells);
  }
  return w.str();
}

inline void save_csv(const Dataset& data, const std::filesystem::path& path) {
  io::write_file(path, to_csv(data));
}

}  // namespace zkd
