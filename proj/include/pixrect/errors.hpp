// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pixrect {

/// Invalid or inconsistent user configuration. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Size mismatch between a bit vector and the grid it is decoded onto.
class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A requested computation would exceed a configured resource budget.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure: singular systems, non-convergence, stiffness. Exit code 2.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double metric = 0.0)
        : std::runtime_error(what), metric_(metric) {}

    /// Condition estimate, residual, or step size, depending on the thrower.
    double metric() const noexcept { return metric_; }

private:
    double metric_;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace pixrect
