#pragma once

#include <vector>

#include "spikeflow/manifold.hpp"
#include "spikeflow/trajectory.hpp"

namespace spikeflow {

// Noise-free drift of the correlation matrix:
//   f(m) = p U - (p/2) m (m^T U + U^T m),  U_ij = lambda_i lambda_j m_ij^{p-1}
Matrix population_rhs(const Matrix& m, const Vector& lambdas, int p);

// Frobenius norm of the projected signal gradient, computable from m alone.
double reduced_gradient_norm(const Matrix& m, const Vector& lambdas, int p,
                             double sqrt_m, double N);

// Correlation history of the noise-free flow dm/dt = sqrt_m * f(m).
// Classical RK4 with step halving near |m| = 1; throws NumericalError when
// the largest singular value of m leaves [0, 1] by more than the tolerance.
Trajectory integrate_population(const Matrix& m0, const Vector& lambdas, int p,
                                double sqrt_m, const FlowConfig& cfg);

struct CrossingEvent {
    int i = 0;  // spike row
    int j = 0;  // column
    double T = 0.0;
};

struct EliminationReport {
    std::vector<CrossingEvent> ordering;    // sorted by T
    std::vector<double> suppressed_max;     // per event: largest competing |m|
    std::vector<CrossingEvent> transients;  // crossings that did not stick
    double eps = 0.1;
    double eps_prime = 0.0;
    bool matched_prediction = false;  // set by callers that have a prediction
};

// For each column, the first time |m_ij| reaches 1 - eps and stays there to
// the end of the trajectory. Earlier excursions above the threshold that
// fall back are reported as transients, as are rows claimed twice.
EliminationReport detect_elimination(const Trajectory& traj, double eps,
                                     double eps_prime);

bool ordering_matches(const EliminationReport& rep,
                      const std::vector<std::pair<int, int>>& predicted);
bool permutation_matches(const EliminationReport& rep,
                         const std::vector<std::pair<int, int>>& predicted);

}  // namespace spikeflow
