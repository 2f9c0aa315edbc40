#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdfforge {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Config,        // bad user configuration or precondition on arguments
  Data,          // malformed / missing / structurally invalid input data
  Numeric,       // non-finite values during optimization or inference
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Violated operation precondition (empty input, bad parameter range).
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Dimension mismatch between tensors / vectors.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// API misuse detected at runtime, e.g. a stale forward tape.
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DegenerateGeometry : public DataError {
 public:
  explicit DegenerateGeometry(const std::string& what) : DataError(what) {}
};

/// Non-finite gradient, objective or parameter during optimization.
class NumericFault : public Error {
 public:
  explicit NumericFault(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

}  // namespace sdfforge
