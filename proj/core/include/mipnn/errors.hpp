#pragma once

#include <stdexcept>
#include <string>

namespace mipnn {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad caller-supplied arguments: dimension mismatches, out-of-range
// parameters, malformed labels.
class InputError : public Error {
 public:
  using Error::Error;
};

// Model construction failures (empty sample set, unbounded guarded
// expression, features outside [0,1], ...).
class BuildError : public Error {
 public:
  using Error::Error;
};

// File parsing failures; messages carry line/field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

// External solver invocation failures.
class SolverError : public Error {
 public:
  using Error::Error;
};

// A training model with no feasible parameter assignment.
class InfeasibleError : public SolverError {
 public:
  using SolverError::SolverError;
};

// Time limit reached without any incumbent.
class TimeoutError : public SolverError {
 public:
  using SolverError::SolverError;
};

// Solution values that cannot be mapped back to a valid network.
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace mipnn
