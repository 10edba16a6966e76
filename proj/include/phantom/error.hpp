#pragma once

#include <stdexcept>
#include <string>

namespace phantom {

enum class ErrorKind {
  config,
  infeasible_split,
  format,
  shape,
  input,
  domain,
  numerical,
  divergence,
  schema,
  degenerate_training,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "configuration error";
    case ErrorKind::infeasible_split: return "infeasible-split error";
    case ErrorKind::format: return "format error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::input: return "input error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::degenerate_training: return "degenerate-training error";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

/// Every failure raised by the library carries a category so the CLI can
/// map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};

class InfeasibleSplitError : public Error {
 public:
  explicit InfeasibleSplitError(const std::string& m) : Error(ErrorKind::infeasible_split, m) {}
};

class FormatError : public Error {
 public:
  FormatError(const std::string& m, long row = -1, long column = -1)
      : Error(ErrorKind::format, m), row_(row), column_(column) {}
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& m) : Error(ErrorKind::shape, m) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& m) : Error(ErrorKind::input, m) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error(ErrorKind::domain, m) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& m) : Error(ErrorKind::numerical, m) {}
};

/// Raised when a training loss leaves the finite/bounded regime. `term` names
/// the offending LossBreakdown field.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& term, double value, long step)
      : Error(ErrorKind::divergence, "term '" + term + "' = " + std::to_string(value) +
                                         " at step " + std::to_string(step)),
        term_(term),
        value_(value),
        step_(step) {}
  const std::string& term() const noexcept { return term_; }
  double value() const noexcept { return value_; }
  long step() const noexcept { return step_; }

 private:
  std::string term_;
  double value_;
  long step_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error(ErrorKind::schema, m) {}
};

class DegenerateTrainingError : public Error {
 public:
  explicit DegenerateTrainingError(const std::string& m)
      : Error(ErrorKind::degenerate_training, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

}  // namespace phantom
