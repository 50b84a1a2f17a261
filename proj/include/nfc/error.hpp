#pragma once

#include <stdexcept>
#include <string>

namespace nfc {

// Typed failures. Every error the library raises derives from nfc::Error so
// callers (the CLI in particular) can report them uniformly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument value (counts, ratios, step sizes).
class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what) : Error("parameter error: " + what) {}
};

/// Tensor/vector dimensions that do not line up.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape error: " + what) {}
};

/// Well-formed input whose content is unusable (unknown label, missing class).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data error: " + what) {}
};

/// Malformed file content; the message names the offending row or offset.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse error: " + what) {}
};

/// Mismatch between objects that must agree (cache vs model, grads vs state).
class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error("state error: " + what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric error: " + what) {}
};

/// Rejected run configuration (unknown key, wrong type, invalid value).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

}  // namespace nfc
