#pragma once

#include <stdexcept>
#include <string>

namespace adjseg {

// Shape or channel-count disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Pixel coordinate outside a field.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A scalar argument outside its admissible range (negative alpha, bad step size, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN or Inf appeared in a state, loss or gradient.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A forward trace is missing the states the backward sweep needs.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed configuration, manifest or on-disk file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adjseg
