#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nbt {

// Base of every error raised by the library. `module()` names the subsystem
// that detected the problem so tools can report it with context.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Numerical failure (non-finite gradient, bad backward call, empty sequence).
class NumericsError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input text. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::string module, const std::string& what, std::size_t line = 0,
             std::size_t column = 0)
      : Error(std::move(module), what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Inconsistent run configuration (bad hyperparameter, no positives, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nbt
