#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slstm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (leak <= 0, zero threshold).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: shape mismatch, out-of-range values, bad config fields.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A state value became NaN or infinite.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& what, std::ptrdiff_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

/// A spiking layer would need a multi-bit x multi-bit product.
class MultiplierAuditError : public Error {
 public:
  using Error::Error;
};

}  // namespace slstm
