#pragma once

#include <stdexcept>

namespace condfilter {

// Bad caller-supplied values: dimension mismatch, k out of range, empty plan.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Filesystem failures: missing file, unwritable path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally malformed input: bad magic, ragged csv, unparseable field.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed input carrying invalid values (NaN/Inf).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Payload shorter than its header promises.
struct LengthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Least-squares system for the cost profile is not solvable.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace condfilter
