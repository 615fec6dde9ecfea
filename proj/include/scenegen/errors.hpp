#pragma once

#include <stdexcept>
#include <string>

namespace scenegen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched or malformed CategoryConfig / PermutationSet / shapes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN or otherwise unusable numeric input.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Input from which no unique answer can be computed (e.g. all weights zero).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Scene / corpus / checkpoint file that violates its schema. The message
// carries the JSON path of the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace scenegen
