#pragma once

#include <stdexcept>
#include <string>

namespace kvbeam {

/// Input violates a documented precondition (bad config, bad dimensions).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure broke down or missed its guaranteed property.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kvbeam
