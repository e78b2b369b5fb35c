#pragma once

#include <stdexcept>
#include <string>

namespace snapnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range user input (bad counts, unknown labels, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Missing or non-finite model parameter.
class ParameterError : public InputError {
 public:
  using InputError::InputError;
};

/// Incompatible lengths or dimensions.
class ShapeError : public InputError {
 public:
  using InputError::InputError;
};

/// Floating-point failure: breakdown, loss of normalization, NaN.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// DMRG did not reach the requested energy tolerance.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double last_delta, double last_energy)
      : NumericalError(what), last_delta_(last_delta), last_energy_(last_energy) {}

  double last_delta() const noexcept { return last_delta_; }
  double last_energy() const noexcept { return last_energy_; }

 private:
  double last_delta_;
  double last_energy_;
};

}  // namespace snapnet
