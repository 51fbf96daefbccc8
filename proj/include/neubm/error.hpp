#pragma once

#include <stdexcept>
#include <string>

namespace neubm {

/// Broad failure category. Maps one-to-one onto the C API status codes and
/// the CLI exit codes.
enum class ErrorCategory {
  Config = 2,   ///< invalid configuration or arguments
  Data = 3,     ///< malformed or structurally invalid input data
  Numeric = 4,  ///< non-finite values, degenerate references, divergence
  Io = 5,       ///< filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

/// Raised for file/line-addressable problems in the canonical dataset format.
class ParseError : public DataError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : DataError(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// A dataset that parses but references nodes that do not exist, or
/// otherwise breaks graph invariants.
class StructuralError : public DataError {
 public:
  explicit StructuralError(const std::string& what) : DataError(what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

}  // namespace neubm
