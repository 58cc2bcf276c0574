#include "spikeflow/population.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "spikeflow/errors.hpp"

namespace spikeflow {

namespace {

Matrix entry_pow(const Matrix& m, int k) {
    Matrix out = Matrix::Ones(m.rows(), m.cols());
    for (int s = 0; s < k; ++s) out = out.cwiseProduct(m);
    return out;
}

// largest singular value of m; r is tiny so the dense solvers are cheap.
// Fixed-size paths keep the per-step invariant check allocation-free.
double sigma_max(const Matrix& m) {
    if (m.cols() == 1 && m.rows() == 1) return std::abs(m(0, 0));
    if (m.rows() == m.cols() && m.rows() == 2) {
        Eigen::Matrix2d gram = (m.transpose() * m).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
        es.computeDirect(gram, Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
    if (m.rows() == m.cols() && m.rows() == 3) {
        Eigen::Matrix3d gram = (m.transpose() * m).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
        es.computeDirect(gram, Eigen::EigenvaluesOnly);
        return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

constexpr double kCorrTol = 1e-6;

}  // namespace

Matrix population_rhs(const Matrix& m, const Vector& lambdas, int p) {
    Matrix U = (lambdas * lambdas.transpose()).cwiseProduct(entry_pow(m, p - 1));
    Matrix S = m.transpose() * U;
    S += S.transpose().eval();
    return p * U - 0.5 * p * (m * S);
}

double reduced_gradient_norm(const Matrix& m, const Vector& lambdas, int p,
                             double sqrt_m, double N) {
    // Frobenius norm of P_X(grad) for the noise-free landscape depends on X
    // only through m once the spikes are orthogonal:
    //   A = -sqrt_m p (ll . m^{p-1}),  B = m^T A,
    //   |P grad|_F^2 = N (tr A^T A - (tr B^2 + tr B^T B) / 2)
    Matrix A = (-sqrt_m * p) *
               (lambdas * lambdas.transpose()).cwiseProduct(entry_pow(m, p - 1));
    Matrix B = m.transpose() * A;
    const double sq = A.squaredNorm() -
                      0.5 * ((B * B).trace() + (B.transpose() * B).trace());
    return std::sqrt(std::max(0.0, N * sq));
}

Trajectory integrate_population(const Matrix& m0, const Vector& lambdas, int p,
                                double sqrt_m, const FlowConfig& cfg) {
    if (m0.rows() != lambdas.size())
        throw ConfigError("correlation rows must match the number of spikes");
    const double lam_top = lambdas.maxCoeff();
    if (!(lam_top > 0.0)) throw ConfigError("population flow needs a positive strength");
    {
        const double sig0 = sigma_max(m0);
        if (sig0 > 1.0 + 10.0 * kCorrTol)
            throw NumericalError("initial correlation operator norm exceeds 1: " +
                                 std::to_string(sig0));
    }

    Trajectory traj;
    Matrix m = m0;
    double t = 0.0;
    double next_sample = 0.0;
    const double h_base = 1e-3 / (lam_top * lam_top * std::max(1.0, sqrt_m));
    const Matrix LL = lambdas * lambdas.transpose();

    // stage and scratch buffers reused across steps; the loop below runs
    // millions of iterations on tiny matrices, so it must not allocate
    const Eigen::Index r = m0.rows(), c = m0.cols();
    Matrix k1(r, c), k2(r, c), k3(r, c), k4(r, c), tmp(r, c);
    Matrix U(r, c), S(c, c), ST(c, c);
    auto rhs = [&](const Matrix& mm, Matrix& out) {
        U = LL;
        for (int s = 0; s < p - 1; ++s) U.array() *= mm.array();
        S.noalias() = mm.transpose() * U;
        ST.noalias() = S.transpose();
        S += ST;
        out.noalias() = mm * S;
        out *= -0.5 * p * sqrt_m;
        out.noalias() += (p * sqrt_m) * U;
    };

    traj.termination = Termination::horizon;
    traj.peak_m = m0;
    traj.peak_abs_m = m0.cwiseAbs();
    for (std::uint64_t step = 0;; ++step) {
        if (t >= next_sample - 1e-12) {
            traj.times.push_back(t);
            traj.snapshots.push_back(m);
            next_sample =
                (std::floor((t + 1e-12) / cfg.sample_dt) + 1.0) * cfg.sample_dt;
        }
        for (Eigen::Index idx = 0; idx < m.size(); ++idx) {
            const double v = m(idx);
            if (std::abs(v) > traj.peak_abs_m(idx)) {
                traj.peak_abs_m(idx) = std::abs(v);
                traj.peak_m(idx) = v;
            }
        }
        if (all_columns_matched(m, cfg.stop_eps)) {
            traj.termination = Termination::recovered;
            break;
        }
        if (t >= cfg.t_max) {
            traj.termination = Termination::horizon;
            break;
        }
        if (step >= cfg.max_steps) {
            traj.termination = Termination::step_cap;
            break;
        }

        double h = h_base;
        if (m.cwiseAbs().maxCoeff() > 0.99) h *= 0.5;
        h = std::min(h, cfg.t_max - t + 1e-15);

        rhs(m, k1);
        tmp = m + (0.5 * h) * k1;
        rhs(tmp, k2);
        tmp = m + (0.5 * h) * k2;
        rhs(tmp, k3);
        tmp = m + h * k3;
        rhs(tmp, k4);
        m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        traj.steps = step + 1;

        // Frobenius bound skips the exact solve while the state is far from
        // the constraint surface
        if (m.norm() > 1.0 + 10.0 * kCorrTol) {
            const double sig = sigma_max(m);
            if (sig > 1.0 + 10.0 * kCorrTol)
                throw NumericalError("correlation operator norm left [0,1]: " +
                                     std::to_string(sig));
        }
    }
    // snapshot the terminal state when the grid missed it
    if (traj.times.empty() || traj.times.back() < t - 1e-12) {
        traj.times.push_back(t);
        traj.snapshots.push_back(m);
    }
    return traj;
}

EliminationReport detect_elimination(const Trajectory& traj, double eps,
                                     double eps_prime) {
    EliminationReport rep;
    rep.eps = eps;
    rep.eps_prime = eps_prime;
    if (traj.snapshots.empty()) return rep;

    const Eigen::Index r_rows = traj.snapshots.front().rows();
    const Eigen::Index r_cols = traj.snapshots.front().cols();
    const std::size_t n = traj.snapshots.size();
    const double thresh = 1.0 - eps;

    std::vector<CrossingEvent> events;
    std::vector<double> suppressed;
    for (Eigen::Index j = 0; j < r_cols; ++j) {
        for (Eigen::Index i = 0; i < r_rows; ++i) {
            // last index strictly below threshold; the sustained stretch
            // starts right after it
            std::ptrdiff_t last_below = -1;
            bool ever_above = false;
            for (std::size_t k = 0; k < n; ++k) {
                const double v = std::abs(traj.snapshots[k](i, j));
                if (v < thresh)
                    last_below = static_cast<std::ptrdiff_t>(k);
                else
                    ever_above = true;
            }
            if (!ever_above) continue;
            const auto sustained_from = static_cast<std::size_t>(last_below + 1);
            if (sustained_from >= n) {
                // crossed at some point but below at the end: transient
                double first_t = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    if (std::abs(traj.snapshots[k](i, j)) >= thresh) {
                        first_t = traj.times[k];
                        break;
                    }
                rep.transients.push_back({static_cast<int>(i), static_cast<int>(j), first_t});
                continue;
            }
            // earlier excursions above the threshold that fell back
            for (std::size_t k = 0; k < sustained_from; ++k)
                if (std::abs(traj.snapshots[k](i, j)) >= thresh) {
                    rep.transients.push_back(
                        {static_cast<int>(i), static_cast<int>(j), traj.times[k]});
                    break;
                }
            // largest competing magnitude in the same column from the
            // crossing onward
            double comp = 0.0;
            for (std::size_t k = sustained_from; k < n; ++k)
                for (Eigen::Index ii = 0; ii < r_rows; ++ii)
                    if (ii != i) comp = std::max(comp, std::abs(traj.snapshots[k](ii, j)));
            events.push_back({static_cast<int>(i), static_cast<int>(j),
                              traj.times[sustained_from]});
            suppressed.push_back(comp);
        }
    }

    // sort by crossing time, keep suppressed values aligned
    std::vector<std::size_t> order(events.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (events[a].T != events[b].T) return events[a].T < events[b].T;
        if (events[a].j != events[b].j) return events[a].j < events[b].j;
        return events[a].i < events[b].i;
    });

    // a row or column claimed twice keeps its earliest event; later claims
    // are demoted to transients
    std::vector<bool> row_used(r_rows, false), col_used(r_cols, false);
    for (std::size_t k : order) {
        const auto& e = events[k];
        if (row_used[e.i] || col_used[e.j]) {
            rep.transients.push_back(e);
            continue;
        }
        row_used[e.i] = true;
        col_used[e.j] = true;
        rep.ordering.push_back(e);
        rep.suppressed_max.push_back(suppressed[k]);
    }
    return rep;
}

bool ordering_matches(const EliminationReport& rep,
                      const std::vector<std::pair<int, int>>& predicted) {
    if (rep.ordering.size() != predicted.size()) return false;
    for (std::size_t k = 0; k < predicted.size(); ++k)
        if (rep.ordering[k].i != predicted[k].first ||
            rep.ordering[k].j != predicted[k].second)
            return false;
    return true;
}

bool permutation_matches(const EliminationReport& rep,
                         const std::vector<std::pair<int, int>>& predicted) {
    if (rep.ordering.size() != predicted.size()) return false;
    std::vector<std::pair<int, int>> got;
    got.reserve(rep.ordering.size());
    for (const auto& e : rep.ordering) got.emplace_back(e.i, e.j);
    std::vector<std::pair<int, int>> want = predicted;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    return got == want;
}

}  // namespace spikeflow
