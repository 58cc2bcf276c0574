#pragma once

#include <stdexcept>
#include <string>

namespace spikeflow {

// Bad user-supplied parameters or config files.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested allocation exceeds the configured memory budget.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loss of numerical validity (non-PD Gram matrix, correlation blow-up, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Greedy selection hit two candidate entries of equal magnitude.
struct TieError : std::runtime_error {
    TieError(int step_, double value_)
        : std::runtime_error("greedy selection tie at step " + std::to_string(step_) +
                             " (competing magnitude " + std::to_string(value_) + ")"),
          step(step_), value(value_) {}
    int step;
    double value;
};

// Envelope evaluated at or past its finite blow-up time.
struct BlowupError : std::runtime_error {
    explicit BlowupError(double t_star_)
        : std::runtime_error("envelope diverges at t = " + std::to_string(t_star_)),
          t_star(t_star_) {}
    double t_star;
};

}  // namespace spikeflow
