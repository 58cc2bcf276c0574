#pragma once

#include "spikeflow/errors.hpp"
#include "spikeflow/model.hpp"
#include "spikeflow/trajectory.hpp"

namespace spikeflow {

// Integration failed mid-flight; `partial` holds everything recorded up to
// the failure so callers can still write diagnostics.
struct IntegrationError : NumericalError {
    IntegrationError(const std::string& what, Trajectory partial_)
        : NumericalError(what), partial(std::move(partial_)) {}
    Trajectory partial;
};

// Retracted gradient descent on the rescaled landscape. Step size adapts as
// dt = eta sqrt(N) / (1 + |grad|_F) so each step moves the correlations by
// about eta in the signal-dominated regime.
Trajectory integrate(const SpikedModel& mod, const StiefelPoint& X0,
                     const FlowConfig& cfg);

// Noise-free surrogate driven directly in correlation space with the same
// step-size rule, using the reduced gradient norm. Cheap cross-check for
// the full integrator.
Trajectory evolve_correlations_only(const SpikedModel& mod, const Matrix& m0,
                                    const FlowConfig& cfg);

}  // namespace spikeflow
