#pragma once

#include <stdexcept>
#include <string>

namespace getup {

// Bad caller input: out-of-range parameters, empty collections, unknown ids.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A model whose canonical joints cannot be resolved by name or override.
class UnresolvableMorphology : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model missing reference sites (imu, head, feet) or failing to parse.
class ModelPreparationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Simulation produced a non-finite or otherwise unusable state.
class EnvironmentFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Calling an API out of order, e.g. stepping a finished episode.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DegenerateVariance : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace getup

namespace getup {

// A loss or parameter became non-finite during training.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace getup

namespace getup {

// A file or directory could not be written or read.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace getup
