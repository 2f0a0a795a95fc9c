#pragma once

#include <stdexcept>

namespace nusest {

// Two sample abscissas are closer than the configured minimum gap.
struct DuplicateAbscissa : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The Gram system factorization failed beyond the documented fallback.
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A tapped-delay-line model with more taps than observations.
struct IdentifiabilityViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Least-squares system numerically singular (condition estimate > 1e12).
struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration (maps to CLI usage errors).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// File or stream failure (maps to CLI I/O errors).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}
