#pragma once

#include <stdexcept>
#include <string>

namespace kpzfit {

// Validation failures on caller input. CLI maps this to exit code 2.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the validated numerical window.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Numerical self-consistency check failed. CLI maps this to exit code 1.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public AccuracyError {
 public:
  using AccuracyError::AccuracyError;
};

// Warnings go through a replaceable sink (stderr by default).
using WarningSink = void (*)(const std::string&);
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace kpzfit
