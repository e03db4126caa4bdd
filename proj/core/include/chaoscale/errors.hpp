#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chaoscale {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

class DerivativeUnavailable : public Error {
 public:
  using Error::Error;
};

class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

class UnderdeterminedFit : public Error {
 public:
  using Error::Error;
};

class SingularFit : public Error {
 public:
  using Error::Error;
};

class NumericalBlowup : public Error {
 public:
  explicit NumericalBlowup(std::size_t step)
      : Error("numerical blowup: non-finite particle position at step " +
              std::to_string(step)),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace chaoscale
