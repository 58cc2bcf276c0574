#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikeflow/manifold.hpp"

namespace spikeflow {

struct ModelOptions {
    // entries of the order-p noise tensor; N^p doubles must fit under this
    double memory_budget = 5e7;
    bool noise = true;
};

// One draw of the observation: r orthogonal spikes of norm sqrt(N) planted
// in an order-p Gaussian tensor. W is stored flat, row-major over the p
// indices, NOT symmetrized; the asymmetric version has the same law once
// contracted and is cheaper to sample.
struct SpikedModel {
    int p = 3;
    int r = 1;
    Eigen::Index N = 0;
    Vector lambdas;
    Matrix V;                // N x r spike frame, V^T V = N I
    std::vector<double> W;   // empty when noise disabled
    double sqrt_m = 1.0;     // clock/strength rescaling, sqrt of sample count
    std::uint64_t seed = 0;

    bool noise_enabled() const { return !W.empty(); }
};

// Validates shapes (p >= 3, 1 <= r <= N, lambdas non-increasing and
// non-negative, sqrt_m > 0) and the memory budget, then draws V and W from
// substreams of `seed`. Regenerating with the same seed is the contract the
// on-disk format relies on.
SpikedModel generate(int p, int r, Eigen::Index N, const Vector& lambdas,
                     double sqrt_m, std::uint64_t seed,
                     const ModelOptions& opts = {});

inline Matrix correlations(const SpikedModel& mod, const Matrix& X) {
    return mod.V.transpose() * X / static_cast<double>(mod.N);
}

// N^{-(p-1)/2} sum_i lambda_i <W, x_i^{x p}>
double h0_value(const SpikedModel& mod, const Matrix& X);

// h0 - sqrt_m * N * sum_{ij} lambda_i lambda_j m_ij^p
double risk_value(const SpikedModel& mod, const Matrix& X);

// Euclidean gradient of the noise part. Column j sums the p slot
// contractions of W against x_j; two full passes over W regardless of p.
// With sequential=true (or threads=1) the reduction order is the fixed
// reference order; parallel runs partition output entries and are bitwise
// identical to it.
Matrix noise_euclidean_gradient(const SpikedModel& mod, const Matrix& X,
                                int threads = 1, bool sequential = false);

// -sqrt_m * p * V * (lambda_i lambda_j m_ij^{p-1})
Matrix signal_euclidean_gradient(const SpikedModel& mod, const Matrix& X);

Matrix euclidean_risk_gradient(const SpikedModel& mod, const Matrix& X,
                               int threads = 1);

// -V^T P_X(grad_noise) / N: the noise contribution to d m / dt
Matrix noise_drift(const SpikedModel& mod, const Matrix& X, int threads = 1);

// Full drift of m under the flow, assembled from the noise route plus the
// closed-form signal route. Requires X on the manifold.
Matrix generator_m(const SpikedModel& mod, const Matrix& X, int threads = 1);

// One JSON header line, then the spike frame as little-endian f64
// column-major. W is not stored; it is regenerated from the seed on load.
void save_model(const SpikedModel& mod, const std::string& path);
SpikedModel load_model(const std::string& path, const ModelOptions& opts = {});

}  // namespace spikeflow
