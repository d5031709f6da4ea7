#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbmhypo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (field sets, configs). Carries 1-based line/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        message_(what),
        line_(line),
        column_(column) {}

  /// The message without the position.
  const std::string& message() const noexcept { return message_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string message_;
  int line_;
  int column_;
};

/// An argument outside the domain of an operation (bad exponent, x <= 0, division by zero, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-PSD covariance, singular matrix, quadrature disagreement).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The pathwise solver produced a non-finite state.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, std::size_t last_valid_index)
      : Error(what + " (last valid index " + std::to_string(last_valid_index) + ")"),
        last_valid_index_(last_valid_index) {}

  std::size_t last_valid_index() const noexcept { return last_valid_index_; }

 private:
  std::size_t last_valid_index_;
};

/// J * Jinv drifted away from the identity.
class ConsistencyError : public Error {
 public:
  ConsistencyError(const std::string& what, double time)
      : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Requested configuration is outside what an estimator supports.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace fbmhypo
