#pragma once

#include <stdexcept>
#include <string>

namespace pmstm {

// Malformed input files / configuration. CLI maps this to exit code 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure (singular matrix, degenerate weights, blown-up chain).
// CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pmstm
