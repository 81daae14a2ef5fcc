#ifndef SHIFTLAB_ERRORS_HPP
#define SHIFTLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace shiftlab {

// Bad arguments: wrong values, non-finite entries, violated preconditions.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Structurally inconsistent inputs (dimension/shape mismatches).
struct StructuralError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mathematically ill-posed request (indefinite matrix, zero spectral gap, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Algorithmic failure at runtime (no convergence, overflow).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration file or flag set; message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure while writing results.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace shiftlab

#endif
