#pragma once

#include <stdexcept>
#include <string>

namespace causal {

/// Base error for everything this library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad inputs: shape mismatches, schema violations, out-of-range config.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Malformed external text (provider responses, checkpoints, data files).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace causal
