#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hierslab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `row()` is the 1-based data row (0 = header / file level).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(row == 0 ? what : what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Input parsed fine but violates a data contract (availability, variance, keys).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (schedule, replications, unknown names).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside a chain.
class SamplerError : public Error {
 public:
  SamplerError(const std::string& what, long iteration)
      : Error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace hierslab
