#pragma once

#include <stdexcept>
#include <string>

namespace stripefree {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands whose shapes (or channel counts) disagree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Argument outside its documented domain (negative scale, eta not in (0,1), ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A per-frequency division hit a vanishing denominator.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite values, predicate never satisfied, etc.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration: unknown key, bad value, missing field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, unwritable or ill-formed image file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace stripefree
