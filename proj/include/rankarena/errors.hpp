#pragma once

#include <stdexcept>
#include <string>

namespace rankarena {

// Each error family maps onto one failure class of the toolkit so callers can
// catch, e.g., a degenerate score without swallowing ingestion problems.

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a score (IR, Sharpe, kurtosis) is undefined, typically zero variance.
struct ScoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigurationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IngestionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rankarena
