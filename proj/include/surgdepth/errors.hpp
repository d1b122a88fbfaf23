// Copyright 2026 The SurgDepth Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace surgdepth {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes or grid geometry do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN / Inf where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or configuration keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. calling backward on a non-scalar.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Sample contents violate their contract (labels out of range, size mismatch).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Two evaluations of a function that must be deterministic disagreed.
class DeterminismError : public Error {
 public:
  using Error::Error;
};

}  // namespace surgdepth
