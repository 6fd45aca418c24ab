#pragma once

#include <stdexcept>
#include <string>

namespace saflab {

// Error taxonomy. The CLI maps config/dimension errors to exit code 2 and
// numeric/instability errors to exit code 3.

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct dimension_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singular_matrix_error : numeric_error {
  using numeric_error::numeric_error;
};

// Thrown when a caller violates a documented precondition (e.g. passing a
// non-symmetric matrix to a symmetric-only routine).
struct contract_violation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace saflab
