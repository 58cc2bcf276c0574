#pragma once

#include <Eigen/Dense>

#include "spikeflow/rng.hpp"

namespace spikeflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Frames X with X^T X = N * I_r, i.e. columns of norm sqrt(N), pairwise
// orthogonal. All tolerances on the constraint scale with N.
struct StiefelPoint {
    Matrix X;
    Eigen::Index n() const { return X.rows(); }
    Eigen::Index r() const { return X.cols(); }
};

struct TangentVector {
    Matrix U;
};

inline constexpr double kOrthTol = 1e-9;
inline constexpr double kPdTol = 1e-12;

// max |X^T X / N - I|
double orth_defect(const Matrix& X);

bool on_manifold(const Matrix& X, double tol = kOrthTol);

// max |X^T U + U^T X| / N; zero iff U is tangent at X
double tangency_defect(const Matrix& X, const Matrix& U);

// S^{-1/2} for symmetric positive definite S. Throws NumericalError if the
// smallest eigenvalue is at or below tol_pd.
Matrix symmetric_inverse_sqrt(const Matrix& S, double tol_pd = kPdTol);

// Haar-uniform frame: Gaussian Z, then X = Z (Z^T Z / N)^{-1/2}.
StiefelPoint sample_uniform(Eigen::Index N, Eigen::Index r, Rng& rng,
                            int max_retries = 3);

TangentVector project_tangent(const StiefelPoint& X, const Matrix& G);

// (X + U)((X + U)^T (X + U) / N)^{-1/2}: metric projection of X + U onto
// the manifold, a second-order retraction for tangent U. The Gram factor is
// recomputed from X + U rather than assumed to be I + U^T U / N, so rounding
// in X or slight non-tangency of U is annihilated instead of amplified over
// long integrations.
StiefelPoint polar_retract(const StiefelPoint& X, const Matrix& U);

// Frame X with V^T X / N = m0 exactly. V must itself be a frame and
// I - m0^T m0 must be positive semidefinite. The orthogonal complement part
// is drawn from rng.
StiefelPoint stiefel_with_correlations(const Matrix& V, const Matrix& m0, Rng& rng);

}  // namespace spikeflow
