#pragma once

#include <stdexcept>
#include <string>

namespace smbsde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or internally inconsistent input (model, problem, arguments).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis inequality (positivity, comparison smallness) does not hold.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a result (degenerate solve,
/// missing bracket, enumeration guard).
class SolveError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant that should hold by construction was violated.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace smbsde
