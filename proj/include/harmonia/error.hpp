#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace harmonia {

enum class ErrorKind {
  parse,          // malformed input document
  validation,     // well-formed but violates an invariant
  not_found,      // referenced entity does not exist
  invalid_state,  // operation not possible in the current state (e.g. empty KB)
  decode,         // image could not be decoded
  io,             // filesystem failure
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::invalid_state: return "invalid_state";
    case ErrorKind::decode: return "decode";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Base of every error raised by the library. `kind()` lets front ends
/// (HTTP service, CLI) map failures onto their own status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error(ErrorKind::parse, message) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::validation, message) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message)
      : Error(ErrorKind::not_found, message) {}
};

class InvalidStateError : public Error {
 public:
  explicit InvalidStateError(const std::string& message)
      : Error(ErrorKind::invalid_state, message) {}
};

class DecodeError : public Error {
 public:
  explicit DecodeError(const std::string& message) : Error(ErrorKind::decode, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

}  // namespace harmonia
