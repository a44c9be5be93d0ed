#pragma once

#include <stdexcept>
#include <string>

namespace bgre {

// Bad inputs or contract violations. CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdowns during sampling or scoring. CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : ValidationError {
  using ValidationError::ValidationError;
};

struct NonFinite : ValidationError {
  using ValidationError::ValidationError;
};

struct SingularDesign : ValidationError {
  using ValidationError::ValidationError;
};

struct UnknownDgp : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidK : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidLevel : ValidationError {
  using ValidationError::ValidationError;
};

struct MissingCovariates : ValidationError {
  using ValidationError::ValidationError;
};

struct NumericalSingularity : NumericalError {
  using NumericalError::NumericalError;
};

struct ChainDiverged : NumericalError {
  using NumericalError::NumericalError;
};

// No mixture component passes the slice indicator. The current group of a
// unit always passes by construction, so hitting this means an internal
// invariant was broken.
struct NoFeasibleGroup : NumericalError {
  using NumericalError::NumericalError;
};

struct DegeneratePredictive : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace bgre
