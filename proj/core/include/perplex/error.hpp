#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace perplex {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (range, size, validity).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The evaluator assigns zero probability where the generator does not.
class SupportError : public Error {
 public:
  using Error::Error;
};

// An exact enumeration would exceed the configured state-space guard.
class GuardError : public Error {
 public:
  using Error::Error;
};

// Malformed or invalid record in a trace, model or profile file.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, std::string field, const std::string& what)
      : Error(describe(line, field, what)), line_(line), field_(std::move(field)), detail_(what) {}

  // 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }
  // The message without the line/field prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string describe(std::size_t line, const std::string& field, const std::string& what) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "field '" + field + "': ";
    return out + what;
  }

  std::size_t line_;
  std::string field_;
  std::string detail_;
};

}  // namespace perplex
