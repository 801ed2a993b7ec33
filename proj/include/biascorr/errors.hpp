#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace biascorr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The label mass at an input is zero, so no probability can be formed.
class ZeroMassError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (negative rates,
/// zero inclusion probability for an observed label, non-finite values...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The generative process exhausted its rejection budget.
class RejectionLimitError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. Carries the 1-based row and column of the offending
/// cell (0 when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Well-formed input that violates the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace biascorr
