#pragma once

#include <string>
#include <vector>

#include "spikeflow/experiments.hpp"
#include "spikeflow/population.hpp"
#include "spikeflow/theory.hpp"
#include "spikeflow/trajectory.hpp"

namespace spikeflow {

// Shortest round-trip decimal form of a double.
std::string fmt17(double x);

// Header `t,m_1_1,...,m_r_r` (entries row-major, 1-based), optionally
// followed by drift columns `d_1_1,...`. Values are written with fmt17 so a
// read-back is bit exact. Unix newlines.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

std::string elimination_to_json(const EliminationReport& rep);

struct PredictionBundle {
    Matrix I0;
    GreedySelection selection;
    int r_c = 0;  // number of selected pairs
    std::vector<std::pair<int, int>> predicted_permutation;
    std::vector<double> t_original;  // per selected pair
    std::vector<double> t_rescaled;
    Regime regime = Regime::sub_threshold;
};

std::string prediction_to_json(const PredictionBundle& pb);

void write_sweep_csv(const std::vector<CellResult>& cells, const std::string& path);
void write_run_detail_csv(const std::vector<CellResult>& cells, const std::string& dir);

// Standalone SVG of |m_ij|(t) polylines; pairs listed in `highlight` are
// drawn heavy, everything else thin. Optionally log-scaled time axis.
void write_svg(const Trajectory& traj,
               const std::vector<std::pair<int, int>>& highlight,
               const std::string& path, bool log_time = false);

}  // namespace spikeflow
