#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace urlearn {

/// Coarse error category. The CLI maps these onto process exit codes.
enum class ErrorKind {
  config,
  io,
  parse,
  structural,
  lookup,
  degeneracy,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad or missing configuration value.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Malformed record. The message names the line or byte offset.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
};

/// Shape mismatch or violated data invariant.
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what)
      : Error(ErrorKind::structural, what) {}
};

/// A requested key (token, class name) has no entry.
class LookupError : public Error {
 public:
  explicit LookupError(const std::string& what) : Error(ErrorKind::lookup, what) {}
};

/// Numerically ill-posed problem: rank deficiency, empty spectrum, zero scale.
class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& what)
      : Error(ErrorKind::degeneracy, what) {}
};

}  // namespace urlearn
