#pragma once

#include <stdexcept>
#include <string>

namespace refscore {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: malformed config files, out-of-range parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Problems with the data itself.
class DataError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable column / field in an input file.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// A field is present but its value is outside its domain.
class ValueError : public DataError {
 public:
  using DataError::DataError;
};

// A keyed lookup (field-year cell, journal, column) failed.
class LookupError : public DataError {
 public:
  using DataError::DataError;
};

// An algorithm was called with inputs violating its precondition
// (e.g. a single class where two are required).
class PreconditionError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace refscore
