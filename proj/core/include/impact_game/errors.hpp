#pragma once

#include <stdexcept>

namespace impact {

// Invalid parameters or configuration values. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// step() called on an episode that already reached t = N.
class EpisodeCompleteError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Shortfall requested for an episode that has not liquidated.
class IncompleteEpisodeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A closed form or linear system degenerates for the given parameters.
class SingularParameterError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read or written; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace impact
