#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spectral_pattern {

// Three error families map onto the CLI exit codes: usage (2), data (3) and
// numeric divergence (4). Anything else is a programming error.

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// geometry
class DegeneratePolygon : public DataError {
 public:
  using DataError::DataError;
};

class SelfIntersectingPolygon : public DataError {
 public:
  using DataError::DataError;
};

// graph
class CollinearInput : public DataError {
 public:
  using DataError::DataError;
};

class DuplicatePoints : public DataError {
 public:
  using DataError::DataError;
};

class DisconnectedInput : public DataError {
 public:
  using DataError::DataError;
};

class IsolatedVertex : public DataError {
 public:
  using DataError::DataError;
};

class NonConvergence : public NumericError {
 public:
  using NumericError::NumericError;
};

// spectral / nn
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidLabel : public DataError {
 public:
  using DataError::DataError;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EmptySplit : public DataError {
 public:
  using DataError::DataError;
};

class DivergedLoss : public NumericError {
 public:
  using NumericError::NumericError;
};

// data
/// Errors tied to a line of an NDJSON input carry the 1-based line number.
class LineError : public DataError {
 public:
  LineError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public LineError {
 public:
  using LineError::LineError;
};

class InvalidPolygon : public LineError {
 public:
  using LineError::LineError;
};

class UnknownLabel : public LineError {
 public:
  using LineError::LineError;
};

class InsufficientSamples : public DataError {
 public:
  using DataError::DataError;
};

class InfeasiblePacking : public DataError {
 public:
  using DataError::DataError;
};

class CorruptCheckpoint : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace spectral_pattern
