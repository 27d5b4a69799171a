#pragma once

#include <stdexcept>
#include <string>

namespace lendopt {

/// Invalid static configuration (grid spacing, probabilities out of range, ...).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or unreadable input data (CSV schema violations carry a row number).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what, long row = -1)
        : std::runtime_error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what),
          row_number(row) {}
    long row_number;
};

/// Estimation failed (too little data, no root bracket, ...).
struct CalibrationError : std::runtime_error {
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical integration produced non-finite values.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Optimizer aborted (non-finite objective, inconsistent dimensions, ...).
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lendopt
