#pragma once

#include <stdexcept>
#include <string>

namespace fimsel {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes, so the distinction between configuration problems and runtime
// numerical failures matters.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad scenario/config input: schema violations, non-PD prior covariance,
// inconsistent dimensions. Exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// Numerical failure at runtime: non-SPD information matrix, factorization
// breakdown, estimator divergence. Exit code 3.
struct NumericError : Error {
  using Error::Error;
};

// API misuse detectable at runtime (duplicate atom push, layout mismatch).
struct UsageError : Error {
  using Error::Error;
};

// Measurement geometry too degenerate to evaluate.
struct GeometryError : Error {
  using Error::Error;
};

// Sensor and target closer than the range guard.
struct SingularGeometryError : GeometryError {
  using GeometryError::GeometryError;
};

// Target at or behind the camera's principal plane.
struct BehindCameraError : GeometryError {
  using GeometryError::GeometryError;
};

// Exhaustive search refused because the combination count guard tripped.
// Exit code 4.
struct OracleGuardError : Error {
  using Error::Error;
};

}  // namespace fimsel
