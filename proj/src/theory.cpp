#include "spikeflow/theory.hpp"

#include <cmath>
#include <limits>

#include "spikeflow/errors.hpp"

namespace spikeflow {

Matrix init_matrix(const Matrix& m0, const Vector& lambdas, int p) {
    Matrix out(m0.rows(), m0.cols());
    for (Eigen::Index j = 0; j < m0.cols(); ++j)
        for (Eigen::Index i = 0; i < m0.rows(); ++i) {
            double v = 1.0;
            for (int s = 0; s < p - 2; ++s) v *= m0(i, j);
            // entries whose growth factor is negative cannot escape and are
            // excluded from the selection (only possible for odd p)
            out(i, j) = v >= 0.0 ? lambdas[i] * lambdas[j] * v : 0.0;
        }
    return out;
}

GreedySelection greedy_selection(const Matrix& I0, double tie_tol) {
    GreedySelection sel;
    const Eigen::Index r_rows = I0.rows();
    const Eigen::Index r_cols = I0.cols();
    std::vector<bool> row_dead(r_rows, false), col_dead(r_cols, false);
    const Eigen::Index n_steps = std::min(r_rows, r_cols);
    for (Eigen::Index step = 0; step < n_steps; ++step) {
        double best = 0.0, second = 0.0;
        Eigen::Index bi = -1, bj = -1;
        for (Eigen::Index j = 0; j < r_cols; ++j) {
            if (col_dead[j]) continue;
            for (Eigen::Index i = 0; i < r_rows; ++i) {
                if (row_dead[i]) continue;
                const double v = std::abs(I0(i, j));
                if (v > best) {
                    second = best;
                    best = v;
                    bi = i;
                    bj = j;
                } else if (v > second) {
                    second = v;
                }
            }
        }
        if (best == 0.0) break;  // all-zero remainder terminates the selection
        if (second > 0.0 && (best - second) <= tie_tol * best)
            throw TieError(static_cast<int>(step), best);
        sel.pairs.push_back({static_cast<int>(bi), static_cast<int>(bj), best});
        row_dead[bi] = true;
        col_dead[bj] = true;
    }
    return sel;
}

namespace {

void check_envelope_params(const EnvelopeParams& par) {
    if (!(par.gamma > 0.0)) throw ConfigError("envelope needs gamma > 0");
    if (!(par.c0 >= 0.0 && par.c0 < 1.0))
        throw ConfigError("drift slack c0 must lie in [0, 1)");
    if (!(par.lam_prod > 0.0)) throw ConfigError("envelope needs lam_prod > 0");
    if (!(par.sqrt_m > 0.0) || !(par.N > 0.0) || par.p < 3)
        throw ConfigError("bad envelope parameters");
}

// growth rate of the comparison ODE at modulation factor `mod`
double envelope_rate(const EnvelopeParams& par, double mod) {
    const double init = par.gamma / std::sqrt(par.N);
    return mod * par.sqrt_m * par.p * (par.p - 2) * par.lam_prod *
           std::pow(init, par.p - 2);
}

double envelope_value(const EnvelopeParams& par, double t, double mod) {
    check_envelope_params(par);
    const double rate = envelope_rate(par, mod);
    const double arg = 1.0 - rate * t;
    if (arg <= 0.0) throw BlowupError(1.0 / rate);
    return (par.gamma / std::sqrt(par.N)) * std::pow(arg, -1.0 / (par.p - 2));
}

}  // namespace

double envelope_lower(const EnvelopeParams& par, double t) {
    return envelope_value(par, t, 1.0 - par.c0);
}

double envelope_upper(const EnvelopeParams& par, double t) {
    return envelope_value(par, t, 1.0 + par.c0);
}

double envelope_blowup_lower(const EnvelopeParams& par) {
    check_envelope_params(par);
    return 1.0 / envelope_rate(par, 1.0 - par.c0);
}

double envelope_blowup_upper(const EnvelopeParams& par) {
    check_envelope_params(par);
    return 1.0 / envelope_rate(par, 1.0 + par.c0);
}

HittingBounds hitting_time_bounds(const EnvelopeParams& par, double target) {
    check_envelope_params(par);
    const double init = par.gamma / std::sqrt(par.N);
    if (!(target > init))
        throw ConfigError("hitting target must exceed the initial value gamma/sqrt(N)");
    const double frac = 1.0 - std::pow(init / target, par.p - 2);
    HittingBounds hb;
    hb.t_lower_env = frac / envelope_rate(par, 1.0 - par.c0);
    hb.t_upper_env = frac / envelope_rate(par, 1.0 + par.c0);
    return hb;
}

double predict_hitting_heuristic(double gamma, double lam_i, double lam_j, int p,
                                 double eps, double N) {
    if (!(gamma > 0.0)) throw ConfigError("hitting heuristic needs gamma > 0");
    if (!(eps * std::sqrt(N) > gamma))
        throw ConfigError("macroscopic threshold must exceed gamma/sqrt(N)");
    const double frac = 1.0 - std::pow(gamma / (eps * std::sqrt(N)), p - 2);
    return frac / (lam_i * lam_j * p * (p - 2) * std::pow(gamma, p - 2)) *
           std::pow(N, 0.5 * (p - 2));
}

bool condition1_member(const Matrix& m0, double N, double gamma1, double gamma2) {
    if (!(gamma1 > gamma2)) throw ConfigError("condition 1 needs gamma1 > gamma2");
    const double s = std::sqrt(N);
    for (Eigen::Index idx = 0; idx < m0.size(); ++idx) {
        const double v = m0(idx);
        if (!(v >= gamma2 / s && v < gamma1 / s)) return false;
    }
    return true;
}

bool condition2_member(const Matrix& m0, const Vector& lambdas, int p,
                       double gamma1, double gamma3) {
    if (!(gamma1 > gamma3)) throw ConfigError("condition 2 needs gamma1 > gamma3");
    const double sep = gamma3 / gamma1;
    std::vector<double> prods;
    prods.reserve(static_cast<std::size_t>(m0.size()));
    for (Eigen::Index j = 0; j < m0.cols(); ++j)
        for (Eigen::Index i = 0; i < m0.rows(); ++i) {
            double v = 1.0;
            for (int s = 0; s < p - 2; ++s) v *= m0(i, j);
            prods.push_back(lambdas[i] * lambdas[j] * v);
        }
    for (std::size_t a = 0; a < prods.size(); ++a)
        for (std::size_t b = 0; b < prods.size(); ++b) {
            if (a == b) continue;
            if (prods[b] == 0.0) {
                // two exact zeros have ratio 1; a zero against a nonzero is
                // infinitely separated
                if (prods[a] == 0.0) return false;
                continue;
            }
            if (!(std::abs(prods[a] / prods[b] - 1.0) > sep)) return false;
        }
    return true;
}

bool condition0_level1_member(const SpikedModel& mod, const Matrix& X0,
                              double gamma0) {
    if (!(gamma0 > 0.0)) throw ConfigError("condition 0 needs gamma0 > 0");
    const Matrix drift = noise_drift(mod, X0);
    return drift.cwiseAbs().maxCoeff() <= gamma0 / std::sqrt(static_cast<double>(mod.N));
}

Regime regime_classifier(double N, int p, double M) {
    if (!(N >= 1.0) || !(M >= 1.0) || p < 3)
        throw ConfigError("regime classifier needs N, M >= 1 and p >= 3");
    if (N == 1.0) return Regime::all_spikes;  // every exponent comparison degenerates
    const double alpha = std::log(M) / std::log(N);
    if (alpha > p - 1) return Regime::all_spikes;
    if (alpha > p - 2) return Regime::first_spike;
    return Regime::sub_threshold;
}

}  // namespace spikeflow
