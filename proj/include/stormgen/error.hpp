#pragma once

#include <stdexcept>
#include <string>

namespace stormgen {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An estimator failed to produce a usable fit.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace stormgen
