#include "spikeflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "spikeflow/errors.hpp"

namespace spikeflow {

double default_eps_prime(Eigen::Index N, int p) {
    const double n = static_cast<double>(N);
    return 10.0 * std::pow(n, -0.25 * (p - 1)) / std::sqrt(std::log(n));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

StiefelPoint sample_init(const SpikedModel& mod, InitMode mode, const Matrix* m0,
                         Rng& rng) {
    switch (mode) {
        case InitMode::uniform:
            return sample_uniform(mod.N, mod.r, rng);
        case InitMode::conditioned_positive: {
            // rejection against the uniform law; every correlation positive
            const long cap = 10L * (1L << std::min(mod.r * mod.r, 20));
            for (long attempt = 0; attempt < cap; ++attempt) {
                StiefelPoint X = sample_uniform(mod.N, mod.r, rng);
                if ((correlations(mod, X.X).array() > 0.0).all()) return X;
            }
            throw NumericalError("conditioned-positive rejection sampler stalled");
        }
        case InitMode::explicit_m0:
            if (m0 == nullptr) throw ConfigError("explicit init needs a correlation matrix");
            return stiefel_with_correlations(mod.V, *m0, rng);
    }
    throw ConfigError("unknown init mode");
}

}  // namespace

RunOutcome run_single(const RunSpec& cell, InitMode mode, const Matrix* m0,
                      const FlowConfig& flow, const DetectParams& detect,
                      std::uint64_t seed, double memory_budget) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome out;
    out.seed = seed;
    out.spike_T.assign(cell.r, kNaN);
    try {
        ModelOptions opts;
        opts.memory_budget = memory_budget;
        SpikedModel mod = generate(cell.p, cell.r, cell.N, cell.lambdas,
                                   cell.sqrt_m, derive_seed(seed, 1), opts);
        Rng init_rng(derive_seed(seed, 2));
        StiefelPoint X0 = sample_init(mod, mode, m0, init_rng);

        GreedySelection sel =
            greedy_selection(init_matrix(correlations(mod, X0.X), mod.lambdas, mod.p));
        std::vector<std::pair<int, int>> predicted;
        for (const auto& pr : sel.pairs) predicted.emplace_back(pr.i, pr.j);

        Trajectory traj = integrate(mod, X0, flow);
        const double ep = detect.eps_prime < 0.0 ? default_eps_prime(cell.N, cell.p)
                                                 : detect.eps_prime;
        EliminationReport rep = detect_elimination(traj, detect.eps, ep);

        out.termination = traj.termination;
        out.recovered = !traj.snapshots.empty() &&
                        all_columns_matched(traj.snapshots.back(), detect.eps);
        out.order_match = ordering_matches(rep, predicted);
        out.perm_match = permutation_matches(rep, predicted);
        for (const auto& e : rep.ordering)
            if (e.i >= 0 && e.i < cell.r) out.spike_T[e.i] = e.T;
        out.ok = true;
    } catch (const std::exception& ex) {
        out.error = ex.what();
    }
    out.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<CellResult> recovery_sweep(const SweepSpec& spec) {
    if (spec.cells.empty()) throw ConfigError("sweep grid is empty");
    if (spec.seeds_per_cell < 1) throw ConfigError("need at least one seed per cell");

    const std::size_t n_cells = spec.cells.size();
    const std::size_t total = n_cells * static_cast<std::size_t>(spec.seeds_per_cell);
    std::vector<RunOutcome> outcomes(total);

    // flat work queue; outcome slots are disjoint so the only shared state
    // is the ticket counter
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= total) return;
            const std::size_t c = k / spec.seeds_per_cell;
            const Matrix* m0 =
                spec.explicit_m0.has_value() ? &*spec.explicit_m0 : nullptr;
            outcomes[k] = run_single(spec.cells[c], spec.init_mode, m0, spec.flow,
                                     spec.detect, derive_seed(spec.master_seed, k),
                                     spec.memory_budget);
        }
    };
    const int n_workers =
        std::max(1, std::min<int>(spec.threads, static_cast<int>(total)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<CellResult> results(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        CellResult& res = results[c];
        res.cell = spec.cells[c];
        res.runs.assign(outcomes.begin() + c * spec.seeds_per_cell,
                        outcomes.begin() + (c + 1) * spec.seeds_per_cell);
        const int r = res.cell.r;
        res.spike_rate.assign(r, 0.0);
        res.mean_T.assign(r, 0.0);
        std::vector<int> crossed(r, 0);
        int n_rec = 0, n_match = 0;
        for (const auto& run : res.runs) {
            if (run.recovered) ++n_rec;
            if (run.recovered && run.perm_match) ++n_match;
            for (int i = 0; i < r; ++i)
                if (std::isfinite(run.spike_T[i])) {
                    ++crossed[i];
                    res.mean_T[i] += run.spike_T[i];
                }
        }
        const double n_runs = static_cast<double>(res.runs.size());
        res.recovery_rate = n_rec / n_runs;
        res.prediction_match_rate = n_rec > 0 ? static_cast<double>(n_match) / n_rec : 0.0;
        for (int i = 0; i < r; ++i) {
            res.spike_rate[i] = crossed[i] / n_runs;
            res.mean_T[i] = crossed[i] > 0 ? res.mean_T[i] / crossed[i] : kNaN;
        }
    }
    return results;
}

double ks_vs_std_normal(std::vector<double> sample) {
    if (sample.empty()) throw ConfigError("KS distance needs a non-empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double F = 0.5 * std::erfc(-sample[i] / std::sqrt(2.0));
        ks = std::max(ks, std::abs(F - static_cast<double>(i + 1) / n));
        ks = std::max(ks, std::abs(F - static_cast<double>(i) / n));
    }
    return ks;
}

ConcentrationResult concentration_experiment(Eigen::Index N, int r, int n_samples,
                                             std::uint64_t seed) {
    if (n_samples < 1000) throw ConfigError("concentration run needs >= 1000 samples");
    ConcentrationResult res;
    res.N = N;
    res.r = r;
    res.n_samples = n_samples;

    Rng rng_v(derive_seed(seed, 0));
    StiefelPoint V = sample_uniform(N, r, rng_v);
    Rng rng_x(derive_seed(seed, 1));

    const double sqN = std::sqrt(static_cast<double>(N));
    std::vector<double> pooled;  // sqrt(N) m_ij over all entries and samples
    pooled.reserve(static_cast<std::size_t>(n_samples) * r * r);
    std::vector<double> m11;
    m11.reserve(n_samples);
    for (int s = 0; s < n_samples; ++s) {
        StiefelPoint X = sample_uniform(N, r, rng_x);
        Matrix m = V.X.transpose() * X.X / static_cast<double>(N);
        for (Eigen::Index idx = 0; idx < m.size(); ++idx) pooled.push_back(sqN * m(idx));
        m11.push_back(sqN * m(0, 0));
    }

    for (double t = 0.0; t <= 4.0 + 1e-9; t += 0.25) res.t_grid.push_back(t);
    const double n_pool = static_cast<double>(pooled.size());
    for (double t : res.t_grid) {
        std::size_t cnt = 0;
        for (double v : pooled)
            if (std::abs(v) > t) ++cnt;
        res.tail_emp.push_back(cnt / n_pool);
    }

    // log-linear fit of the tail against t^2 where counts are informative
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n_fit = 0;
    for (std::size_t k = 0; k < res.t_grid.size(); ++k) {
        if (res.t_grid[k] <= 0.0) continue;
        if (res.tail_emp[k] * n_pool < 10.0) continue;
        const double x = res.t_grid[k] * res.t_grid[k];
        const double y = std::log(res.tail_emp[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n_fit;
    }
    if (n_fit >= 2) {
        const double denom = n_fit * sxx - sx * sx;
        const double slope = (n_fit * sxy - sx * sy) / denom;
        res.fit_c = -slope;
        res.fit_log_C = (sy - slope * sx) / n_fit;
    }

    res.small_t = {0.025, 0.05, 0.1, 0.15, 0.2};
    for (double t : res.small_t) {
        std::size_t cnt = 0;
        for (double v : m11)
            if (std::abs(v) < t) ++cnt;
        res.small_emp.push_back(cnt / static_cast<double>(n_samples));
    }

    res.ks_m11 = ks_vs_std_normal(m11);
    return res;
}

std::vector<ParityRun> parity_experiment(int p, Eigen::Index N, double lambda,
                                         double sqrt_m,
                                         const std::vector<double>& m0s,
                                         const FlowConfig& flow, std::uint64_t seed) {
    std::vector<ParityRun> table;
    table.reserve(m0s.size());
    ModelOptions opts;
    opts.noise = false;
    Vector lam(1);
    lam << lambda;
    for (std::size_t k = 0; k < m0s.size(); ++k) {
        SpikedModel mod = generate(p, 1, N, lam, sqrt_m, derive_seed(seed, k), opts);
        Rng rng(derive_seed(seed, 1000 + k));
        Matrix m0(1, 1);
        m0 << m0s[k];
        StiefelPoint X0 = stiefel_with_correlations(mod.V, m0, rng);
        Trajectory traj = integrate(mod, X0, flow);

        ParityRun run;
        run.m0 = m0s[k];
        run.final_m = traj.snapshots.back()(0, 0);
        if (std::abs(run.final_m) >= 1.0 - flow.stop_eps)
            run.recovered_sign = run.final_m > 0.0 ? 1 : -1;
        run.peak_signed = -std::numeric_limits<double>::infinity();
        for (const auto& snap : traj.snapshots)
            run.peak_signed = std::max(run.peak_signed, snap(0, 0));
        table.push_back(run);
    }
    return table;
}

}  // namespace spikeflow
