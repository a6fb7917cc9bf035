#pragma once

#include <stdexcept>
#include <string>

namespace hargnn {

/// Base for every error raised by the library. The CLI maps subclasses onto
/// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not conform for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CSV, meta JSON, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

/// CSV parse failure with the offending file and 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Invalid configuration values or conflicting settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values encountered during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hargnn
