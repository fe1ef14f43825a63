#pragma once

#include <stdexcept>
#include <string>

namespace drsplit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class NonFiniteError : public Error {
public:
  using Error::Error;
};

/// Raised when an operator fails the monotonicity requirement, either at
/// construction or when its resolvent system turns out to be singular.
class MonotonicityError : public Error {
public:
  using Error::Error;
};

class NotSingleValuedError : public Error {
public:
  using Error::Error;
};

class OracleUnavailable : public Error {
public:
  using Error::Error;
};

class ReferenceNotInSolutionSet : public Error {
public:
  using Error::Error;
};

/// Malformed input documents. `path` is a JSON-pointer style location.
class ParseError : public Error {
public:
  ParseError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

}  // namespace drsplit
