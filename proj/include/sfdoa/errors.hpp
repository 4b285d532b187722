#pragma once

#include <stdexcept>

namespace sfdoa {

/// Invalid argument passed to a library routine (bad order, position outside room, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent configuration (empty band, degenerate geometry, bad sweep setup).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalRankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An estimator could not produce a value (too little decay range, empty sample set).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sfdoa
