#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace siegel {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad argument, bad range).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A linearizer series hit an exact or numerical resonance before the
/// order an operation needed.
class ResonanceError : public Error {
 public:
  ResonanceError(std::size_t order, const std::string& what)
      : Error(what), order_(order) {}

  std::size_t order() const noexcept { return order_; }

 private:
  std::size_t order_;
};

/// Not enough usable data (coefficients, samples) for an estimate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace siegel
