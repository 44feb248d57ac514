#pragma once

#include <stdexcept>
#include <string>

namespace ftheat {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (bad rows, incomplete trips,
/// contradictory summaries).
class DataError : public Error {
public:
  using Error::Error;
};

/// Numerical procedure could not produce a usable answer (singular
/// covariance, search exceeded its cap, unnormalizable posterior).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Argument outside an operation's documented domain.
class DomainError : public Error {
public:
  using Error::Error;
};

}  // namespace ftheat
