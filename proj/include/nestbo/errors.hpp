#pragma once

#include <stdexcept>
#include <string>

namespace nestbo {

/// Raised when a factorization or solve breaks down in floating point.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hessian too close to singular for the scale factor or a Newton solve.
class SingularHessianError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace nestbo
