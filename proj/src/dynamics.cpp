#include "spikeflow/dynamics.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "spikeflow/errors.hpp"
#include "spikeflow/population.hpp"

namespace spikeflow {

namespace {

void update_peaks(Trajectory& traj, const Matrix& m) {
    for (Eigen::Index idx = 0; idx < m.size(); ++idx) {
        const double v = m(idx);
        if (std::abs(v) > traj.peak_abs_m(idx)) {
            traj.peak_abs_m(idx) = std::abs(v);
            traj.peak_m(idx) = v;
        }
    }
}

double sigma_max_small(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace

Trajectory integrate(const SpikedModel& mod, const StiefelPoint& X0,
                     const FlowConfig& cfg) {
    if (X0.n() != mod.N || X0.r() != mod.r)
        throw ConfigError("initial frame shape does not match the model");
    if (orth_defect(X0.X) > 10 * kOrthTol)
        throw ConfigError("initial frame is not on the manifold");

    const double N = static_cast<double>(mod.N);
    const double sqN = std::sqrt(N);
    const int threads = cfg.deterministic_reduction ? 1 : std::max(1, cfg.threads);

    Trajectory traj;
    traj.peak_m = Matrix::Zero(mod.r, mod.r);
    traj.peak_abs_m = Matrix::Zero(mod.r, mod.r);

    StiefelPoint X = X0;
    double t = 0.0;
    double next_sample = 0.0;

    for (;;) {
        Matrix Gn = noise_euclidean_gradient(mod, X.X, threads,
                                             cfg.deterministic_reduction);
        Matrix G = Gn + signal_euclidean_gradient(mod, X.X);
        TangentVector RG = project_tangent(X, G);
        const double gnorm = RG.U.norm();
        Matrix m = correlations(mod, X.X);
        update_peaks(traj, m);

        if (!std::isfinite(gnorm) || !m.allFinite()) {
            traj.terminal_X = X.X;
            throw IntegrationError("non-finite gradient at t = " + std::to_string(t),
                                   traj);
        }

        Termination why = traj.termination;
        bool stop = false;
        if (all_columns_matched(m, cfg.stop_eps)) {
            why = Termination::recovered;
            stop = true;
        } else if (t >= cfg.t_max - 1e-12) {
            why = Termination::horizon;
            stop = true;
        } else if (traj.steps >= cfg.max_steps) {
            why = Termination::step_cap;
            stop = true;
        }

        if (stop || t >= next_sample - 1e-12) {
            traj.times.push_back(t);
            traj.snapshots.push_back(m);
            if (cfg.record_noise_drift && mod.noise_enabled()) {
                Matrix PGn = project_tangent(X, Gn).U;
                traj.noise_drift_snapshots.push_back(-(mod.V.transpose() * PGn) / N);
            }
            // jump the grid cursor past t in one move; a long step can
            // overshoot arbitrarily many sample points
            next_sample =
                (std::floor((t + 1e-12) / cfg.sample_dt) + 1.0) * cfg.sample_dt;
        }
        if (stop) {
            traj.termination = why;
            traj.terminal_X = X.X;
            return traj;
        }

        double dt = cfg.eta * sqN / (1.0 + gnorm);
        dt = std::min(dt, cfg.t_max - t);
        try {
            X = polar_retract(X, Matrix(-dt * RG.U));
        } catch (const NumericalError& e) {
            traj.terminal_X = X.X;
            throw IntegrationError(std::string("retraction failed at t = ") +
                                       std::to_string(t) + ": " + e.what(),
                                   traj);
        }
        t += dt;
        ++traj.steps;

        const double defect = orth_defect(X.X);
        if (defect > 10 * kOrthTol) {
            traj.terminal_X = X.X;
            throw IntegrationError("left the manifold at t = " + std::to_string(t) +
                                       " (defect " + std::to_string(defect) + ")",
                                   traj);
        }
    }
}

Trajectory evolve_correlations_only(const SpikedModel& mod, const Matrix& m0,
                                    const FlowConfig& cfg) {
    if (m0.rows() != mod.r || m0.cols() != mod.r)
        throw ConfigError("correlation matrix shape does not match the model");

    const double N = static_cast<double>(mod.N);
    const double sqN = std::sqrt(N);
    const double a = mod.sqrt_m * mod.p;
    constexpr double kCorrTol = 1e-6;
    {
        const double sig0 = sigma_max_small(m0);
        if (sig0 > 1.0 + 10.0 * kCorrTol)
            throw NumericalError("initial correlation operator norm exceeds 1: " +
                                 std::to_string(sig0));
    }

    Trajectory traj;
    traj.peak_m = Matrix::Zero(mod.r, mod.r);
    traj.peak_abs_m = Matrix::Zero(mod.r, mod.r);

    Matrix m = m0;
    double t = 0.0;
    double next_sample = 0.0;
    const Matrix LL = mod.lambdas * mod.lambdas.transpose();

    for (;;) {
        update_peaks(traj, m);

        Termination why = traj.termination;
        bool stop = false;
        if (all_columns_matched(m, cfg.stop_eps)) {
            why = Termination::recovered;
            stop = true;
        } else if (t >= cfg.t_max - 1e-12) {
            why = Termination::horizon;
            stop = true;
        } else if (traj.steps >= cfg.max_steps) {
            why = Termination::step_cap;
            stop = true;
        }

        if (stop || t >= next_sample - 1e-12) {
            traj.times.push_back(t);
            traj.snapshots.push_back(m);
            // jump the grid cursor past t in one move; a long step can
            // overshoot arbitrarily many sample points
            next_sample =
                (std::floor((t + 1e-12) / cfg.sample_dt) + 1.0) * cfg.sample_dt;
        }
        if (stop) {
            traj.termination = why;
            return traj;
        }

        const double gnorm = reduced_gradient_norm(m, mod.lambdas, mod.p,
                                                   mod.sqrt_m, N);
        double dt = cfg.eta * sqN / (1.0 + gnorm);
        dt = std::min(dt, cfg.t_max - t);

        // exact correlation-space image of one retracted descent step:
        //   m' = (m + dt sqrt_m f(m)) (I + U^T U / N)^{-1/2}
        // with U^T U / N expressible through m because the spikes are a frame
        Matrix C = LL;
        for (int s = 0; s < mod.p - 1; ++s) C = C.cwiseProduct(m);
        Matrix S = m.transpose() * C;
        S += S.transpose().eval();
        Matrix f = static_cast<double>(mod.p) * C -
                   (0.5 * mod.p) * (m * S);
        Matrix CS = C.transpose() * m * S;
        Matrix utu = (dt * dt * a * a) *
                     (C.transpose() * C - 0.5 * (CS + CS.transpose()) + 0.25 * S * S);
        Matrix corr;
        try {
            corr = symmetric_inverse_sqrt(Matrix::Identity(mod.r, mod.r) + utu);
        } catch (const NumericalError&) {
            throw NumericalError("reduction breakdown: step metric lost rank at t = " +
                                 std::to_string(t));
        }
        m = (m + (dt * mod.sqrt_m) * f) * corr;
        t += dt;
        ++traj.steps;

        const double sig = sigma_max_small(m);
        if (sig > 1.0 + 10.0 * kCorrTol)
            throw NumericalError("reduction breakdown: correlation norm " +
                                 std::to_string(sig) + " at t = " + std::to_string(t));
    }
}

}  // namespace spikeflow
