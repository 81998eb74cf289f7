#pragma once

#include <stdexcept>
#include <string>

namespace sensorqc {

/// Bad arguments, configuration values or command usage.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data that cannot be processed (malformed rows, too many gaps, wrong lengths).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A saved filter state that does not belong to the current model.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown inside the filter (e.g. a singular innovation covariance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sensorqc
