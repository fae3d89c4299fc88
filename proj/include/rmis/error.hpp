#pragma once

#include <stdexcept>
#include <string>

namespace rmis {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes or dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents: bad magic, truncation, unknown fields.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition (bad argument value, unknown name, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training loss blew up; carries the diagnostic checkpoint path if one was written.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::string dump_path)
      : Error(what), dump_path_(std::move(dump_path)) {}
  const std::string& dump_path() const noexcept { return dump_path_; }

 private:
  std::string dump_path_;
};

}  // namespace rmis
