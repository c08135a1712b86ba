#pragma once

#include <stdexcept>
#include <string>

namespace lms {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function argument violates its precondition (negative distance,
/// non-finite weight, dimension mismatch).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Configuration text could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A parsed value violates a domain invariant. `field()` names the offending
/// key so the CLI can report it.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The combination of settings cannot be executed (e.g. a randomized policy
/// on a channel without a declared state alphabet).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed its cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// The LP routine failed numerically.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace lms
