#pragma once

#include <stdexcept>
#include <string>

namespace slicedim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An atom, node or cell budget would be exceeded.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// A query asks for detail finer than the quadrature resolution.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace slicedim
