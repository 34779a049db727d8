#pragma once

#include <stdexcept>
#include <string>

namespace penumbra {

struct SourceLocation {
  int line = 1;
  int column = 1;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed DSL or scene text. what() already carries "line:col: ".
class ParseError : public Error {
 public:
  ParseError(const std::string& message, SourceLocation loc)
      : Error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + message),
        location_(loc),
        message_(message) {}

  SourceLocation location() const { return location_; }
  const std::string& message() const { return message_; }

 private:
  SourceLocation location_;
  std::string message_;
};

/// A primitive was evaluated outside its domain (log of a non-positive value, ...).
class DomainError : public Error {
 public:
  DomainError(const std::string& message, SourceLocation loc)
      : Error("domain error at " + std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " +
              message),
        location_(loc) {}

  SourceLocation location() const { return location_; }

 private:
  SourceLocation location_;
};

/// Rank deficiency, off-ambient points, non-tangent fields.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class SceneError : public Error {
 public:
  using Error::Error;
};

}  // namespace penumbra
