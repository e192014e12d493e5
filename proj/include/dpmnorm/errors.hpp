#pragma once

#include <stdexcept>
#include <string>

namespace dpmnorm {

// A documented precondition of an operation does not hold (e.g. n < p + 1).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The data are not in general position: the scatter matrix is singular.
class DegenerateDataError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// A computation produced a non-finite value where a density was expected.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpmnorm
