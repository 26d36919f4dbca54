#pragma once

#include <stdexcept>
#include <string>

namespace bellsim {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value is missing, malformed, or violates a type invariant.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)),
        message_(message) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

/// Zero mass or displacement: the collapse time diverges.
class UndefinedCollapseError : public Error {
 public:
  using Error::Error;
};

/// The step response never reaches the requested displacement.
class UnreachableDisplacementError : public Error {
 public:
  using Error::Error;
};

/// Correlation coefficient, visibility, or rate outside its valid range.
class InvalidValueError : public Error {
 public:
  using Error::Error;
};

/// The scan does not cover enough phase to constrain a fringe.
class InsufficientSpanError : public Error {
 public:
  using Error::Error;
};

/// The fringe fit has no signal (e.g. all-zero scan).
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Malformed scan or scenario file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace bellsim
