// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace zkd {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Logit vector whose spread is too small to standardize.
class DegenerateLogits : public Error {
 public:
  using Error::Error;
};

/// KL or cross-entropy with p(k) > 0 but q(k) = 0.
class InfiniteDivergence : public Error {
 public:
  using Error::Error;
};

/// Expectation target outside the open range (min, max) of the logits.
class UnattainableConstraint : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MalformedCheckpoint : public Error {
 public:
  using Error::Error;
};

class CheckpointVersionError : public Error {
 public:
  using Error::Error;
};

/// CSV parse failure; row() is 1-based and counts the header line if present.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Invalid configuration. path() is a JSON-pointer-like location ("/kd/tau").
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Iterative solver hit its iteration cap. Carries the last iterate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_state,
                   std::size_t iterations)
      : Error(what), last_state_(std::move(last_state)),
        iterations_(iterations) {}
  const std::vector<double>& last_state() const noexcept { return last_state_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> last_state_;
  std::size_t iterations_;
};

}  // namespace zkd
