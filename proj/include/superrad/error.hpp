#pragma once

#include <stdexcept>
#include <string>

namespace superrad {

/// Violated precondition on a caller-supplied value (negative intensity,
/// unnormalized vector, mismatched dimensions, ...).
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Rejected experiment description. Carries an optional line/column for
/// syntax errors.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

/// Failure inside the numerics: coupling singularity, step-size underflow,
/// trace or Hermiticity drift beyond the allowed bound.
class NumericsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SingularityError : public NumericsError {
public:
  using NumericsError::NumericsError;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace superrad
