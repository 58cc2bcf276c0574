#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spikeflow/dynamics.hpp"
#include "spikeflow/population.hpp"
#include "spikeflow/theory.hpp"

namespace spikeflow {

enum class InitMode { uniform, conditioned_positive, explicit_m0 };

struct RunSpec {
    int p = 3;
    int r = 1;
    Eigen::Index N = 64;
    Vector lambdas;
    double sqrt_m = 1.0;
};

struct DetectParams {
    double eps = 0.1;
    // negative means "use the default 10 N^{-(p-1)/4} / sqrt(log N)"
    double eps_prime = -1.0;
};

double default_eps_prime(Eigen::Index N, int p);

struct SweepSpec {
    std::vector<RunSpec> cells;
    int seeds_per_cell = 10;
    InitMode init_mode = InitMode::uniform;
    std::optional<Matrix> explicit_m0;
    FlowConfig flow;
    DetectParams detect;
    std::uint64_t master_seed = 1;
    int threads = 1;
    double memory_budget = 5e7;
};

struct RunOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    bool recovered = false;
    bool order_match = false;
    bool perm_match = false;
    Termination termination = Termination::horizon;
    std::vector<double> spike_T;  // per spike row; NaN when never crossed
    double wall_s = 0.0;
};

struct CellResult {
    RunSpec cell;
    std::vector<RunOutcome> runs;
    double recovery_rate = 0.0;
    double prediction_match_rate = 0.0;  // among recovered runs
    std::vector<double> spike_rate;      // per spike row
    std::vector<double> mean_T;          // per spike row, over runs that crossed
};

RunOutcome run_single(const RunSpec& cell, InitMode mode, const Matrix* m0,
                      const FlowConfig& flow, const DetectParams& detect,
                      std::uint64_t seed, double memory_budget);

// Grid of flows; deterministic for a fixed master_seed regardless of
// thread count (run seeds are derived per index, results joined in index
// order).
std::vector<CellResult> recovery_sweep(const SweepSpec& spec);

// Empirical law of sqrt(N) m_ij under the uniform initialization, pooled
// over entries, against the standard Gaussian.
struct ConcentrationResult {
    Eigen::Index N = 0;
    int r = 0;
    int n_samples = 0;
    std::vector<double> t_grid;
    std::vector<double> tail_emp;   // P(|sqrt(N) m| > t), pooled entries
    double fit_log_C = 0.0;         // fit of log P = log C - c t^2
    double fit_c = 0.0;             // Gaussian tails give c near 1/2
    std::vector<double> small_t;    // small-ball grid for the (1,1) entry
    std::vector<double> small_emp;  // P(|m_11| <= t/sqrt(N))
    double ks_m11 = 0.0;            // KS distance of sqrt(N) m_11 to N(0,1)
};

ConcentrationResult concentration_experiment(Eigen::Index N, int r,
                                             int n_samples, std::uint64_t seed);

struct ParityRun {
    double m0 = 0.0;
    double final_m = 0.0;
    int recovered_sign = 0;  // 0 when no recovery
    double peak_signed = 0.0;
};

// Noise-free single-spike flows started at prescribed scalar correlations;
// probes which sign the flow can reach for odd and even p.
std::vector<ParityRun> parity_experiment(int p, Eigen::Index N, double lambda,
                                         double sqrt_m,
                                         const std::vector<double>& m0s,
                                         const FlowConfig& flow,
                                         std::uint64_t seed);

// Kolmogorov-Smirnov distance of a sample to the standard normal CDF.
double ks_vs_std_normal(std::vector<double> sample);

}  // namespace spikeflow
