#pragma once

#include <stdexcept>
#include <string>

namespace turngov {

enum class ErrorCode {
  invalid_argument = 1,
  parse = 2,
  validation = 3,
  io = 4,
  version = 5,
  corrupt = 6,
  state = 7,
  runtime = 8,
};

/// Base exception for every failure raised by the core. The C API maps
/// `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::invalid_argument, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(ErrorCode::parse, format(what, line, column)),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line,
                            std::size_t column) {
    std::string loc = "line " + std::to_string(line);
    if (column > 0) loc += ":" + std::to_string(column);
    return loc + ": " + what;
  }
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCode::validation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what)
      : Error(ErrorCode::version, what) {}
};

class CorruptError : public Error {
 public:
  explicit CorruptError(const std::string& what)
      : Error(ErrorCode::corrupt, what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(ErrorCode::state, what) {}
};

}  // namespace turngov
