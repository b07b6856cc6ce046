#pragma once

#include <stdexcept>
#include <string>

namespace repu {

// Shape or argument misuse; the CLI maps these to a usage failure.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values, singular systems, divergence: anything numerical.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace repu
