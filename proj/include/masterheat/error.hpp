#pragma once

#include <stdexcept>
#include <string>

namespace masterheat {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments or configuration was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value or failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace masterheat
