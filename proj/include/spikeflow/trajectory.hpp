#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikeflow/manifold.hpp"

namespace spikeflow {

enum class Termination { recovered, horizon, step_cap };

inline const char* termination_name(Termination t) {
    switch (t) {
        case Termination::recovered: return "recovered";
        case Termination::horizon: return "horizon";
        case Termination::step_cap: return "step_cap";
    }
    return "?";
}

struct FlowConfig {
    double eta = 1e-2;        // target correlation change per step
    double t_max = 1.0;       // horizon in rescaled time
    double sample_dt = 1e-2;  // snapshot spacing
    double stop_eps = 0.1;    // recovery threshold on 1 - |m|
    std::uint64_t max_steps = 50'000'000;
    bool deterministic_reduction = false;  // force the serial reference path
    bool record_noise_drift = false;
    int threads = 1;
};

// Correlation history of one flow. Snapshots hold m(t) = V^T X(t) / N, not
// the full frames; terminal_X is the only frame kept.
struct Trajectory {
    std::vector<double> times;
    std::vector<Matrix> snapshots;
    std::vector<Matrix> noise_drift_snapshots;  // filled only when requested
    Matrix terminal_X;
    Termination termination = Termination::horizon;
    std::uint64_t steps = 0;
    Matrix peak_m;      // entrywise value of largest magnitude seen, signed
    Matrix peak_abs_m;  // entrywise running max of |m|
};

// Every column j has some row i with |m_ij| >= 1 - eps, and those rows are
// distinct across columns.
inline bool all_columns_matched(const Matrix& m, double eps) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index best = 0;
        m.col(j).cwiseAbs().maxCoeff(&best);
        if (std::abs(m(best, j)) < 1.0 - eps) return false;
        for (auto r : rows)
            if (r == best) return false;
        rows.push_back(best);
    }
    return true;
}

}  // namespace spikeflow
