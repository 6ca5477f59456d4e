#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace porelab {

// Invalid input data or configuration.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Grid cannot resolve the requested geometry.
struct ResolvabilityError : std::runtime_error {
    ResolvabilityError(const std::string& msg, int required_n)
        : std::runtime_error(msg), required_n(required_n) {}
    int required_n;
};

// Iterative solver failed to reach its tolerance.
struct SolverError : std::runtime_error {
    SolverError(const std::string& msg, std::vector<double> residuals = {})
        : std::runtime_error(msg), residual_history(std::move(residuals)) {}
    std::vector<double> residual_history;
};

// Computed quantity violates a required numerical-quality property.
struct NumericalQualityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace porelab
