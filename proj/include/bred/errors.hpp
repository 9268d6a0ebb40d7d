#pragma once

#include <stdexcept>
#include <string>

namespace bred {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChartError : ModelError {
  using ModelError::ModelError;
};
struct DegenerateOrbitError : ModelError {
  using ModelError::ModelError;
};
struct DegenerateMetricError : ModelError {
  using ModelError::ModelError;
};
// Faddeev-Popov matrix singular: the gauge slice is not transversal here.
struct GribovError : ModelError {
  using ModelError::ModelError;
};
struct NumericalDegeneracyError : ModelError {
  using ModelError::ModelError;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bred
