#pragma once

#include <stdexcept>
#include <string>

namespace alotune {

// Malformed or inconsistent input data (bad CSV, unknown column, label
// problems, shape mismatches). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during a computation (indefinite system, pole in the
// leave-one-out correction, divergent inner solve). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace alotune
