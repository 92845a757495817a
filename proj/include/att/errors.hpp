#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace att {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes: FormatError -> 2, NumericalError and subclasses -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

// Malformed files or inconsistent input data.
class FormatError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// The represented wave function vanished identically.
class DegenerateModelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroAmplitudeError : public NumericalError {
 public:
  ZeroAmplitudeError(std::size_t sample_index, const std::string& what)
      : NumericalError(what + " (sample " + std::to_string(sample_index) + ")"),
        sample_index_(sample_index) {}

  std::size_t sample_index() const { return sample_index_; }

 private:
  std::size_t sample_index_;
};

}  // namespace att
