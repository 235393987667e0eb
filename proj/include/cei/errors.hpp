#pragma once

#include <stdexcept>
#include <string>

namespace cei {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document (XML, JSON, OBJ/STL).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Link/joint graph is not a single rooted tree.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// A type invariant was violated (limits, axes, partitions, configs).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Vector or set sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Optimization produced a non-finite loss or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cei
