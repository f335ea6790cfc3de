#pragma once

#include <stdexcept>
#include <string>

namespace depthfill {

// Base for every error raised by the library. The CLI maps the subclasses
// onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File is readable but not in a format we decode.
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

// Header or payload is malformed or truncated.
class CorruptFileError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data violates a precondition (dimension mismatch, bad
// parameter, empty region, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace depthfill
