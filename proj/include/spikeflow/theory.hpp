#pragma once

#include <cstdint>
#include <vector>

#include "spikeflow/manifold.hpp"
#include "spikeflow/model.hpp"

namespace spikeflow {

// lambda_i lambda_j m_ij^{p-2}, zeroed where m_ij^{p-2} < 0 (only possible
// for odd p and negative correlation, where the pair cannot grow).
Matrix init_matrix(const Matrix& m0, const Vector& lambdas, int p);

struct GreedyPair {
    int i = 0;
    int j = 0;
    double value = 0.0;  // |I0_ij| at selection time
};

struct GreedySelection {
    std::vector<GreedyPair> pairs;  // in selection order
};

// Repeatedly take the largest |entry|, delete its row and column. A tie
// within relative tie_tol among remaining entries throws TieError. Entries
// that are exactly zero never get selected; selection stops there.
GreedySelection greedy_selection(const Matrix& I0, double tie_tol = 1e-12);

struct EnvelopeParams {
    double gamma = 1.0;     // initial correlation scale, m(0) = gamma/sqrt(N)
    double lam_prod = 1.0;  // lambda_i * lambda_j of the pair
    double c0 = 0.0;        // drift modulation amplitude, in [0, 1)
    double sqrt_m = 1.0;
    int p = 3;
    double N = 1.0;
};

// Closed-form squeeze on the early-phase growth of one correlation:
//   (gamma/sqrt(N)) (1 - (1 -/+ c0) sqrt_m p(p-2) lam_prod (gamma/sqrt(N))^{p-2} t)^{-1/(p-2)}
// lower uses (1 - c0), upper uses (1 + c0). Throws BlowupError at the pole.
double envelope_lower(const EnvelopeParams& par, double t);
double envelope_upper(const EnvelopeParams& par, double t);
double envelope_blowup_lower(const EnvelopeParams& par);
double envelope_blowup_upper(const EnvelopeParams& par);

struct HittingBounds {
    double t_lower_env = 0.0;  // hitting time of the LOWER envelope (later)
    double t_upper_env = 0.0;  // hitting time of the upper envelope (earlier)
};

// Times at which each envelope reaches `target`; any drift with modulation
// inside [1-c0, 1+c0] hits between them. target must exceed gamma/sqrt(N).
HittingBounds hitting_time_bounds(const EnvelopeParams& par, double target);

// Point estimate of the time for one pair correlation to grow from
// gamma/sqrt(N) to eps, in the original (unrescaled) clock:
//   (1 - (gamma/(eps sqrt(N)))^{p-2}) / (li lj p(p-2) gamma^{p-2}) * N^{(p-2)/2}
double predict_hitting_heuristic(double gamma, double lam_i, double lam_j,
                                 int p, double eps, double N);

// gamma2/sqrt(N) <= m_ij < gamma1/sqrt(N) for every entry (signed bounds)
bool condition1_member(const Matrix& m0, double N, double gamma1, double gamma2);

// Every pair of candidate products lambda_i lambda_j m_ij^{p-2} is ratio-
// separated by more than gamma3/gamma1.
bool condition2_member(const Matrix& m0, const Vector& lambdas, int p,
                       double gamma1, double gamma3);

// |noise drift of m_ij at X0| <= gamma0/sqrt(N) for every entry
bool condition0_level1_member(const SpikedModel& mod, const Matrix& X0,
                              double gamma0);

enum class Regime { all_spikes, first_spike, sub_threshold };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::all_spikes: return "all_spikes";
        case Regime::first_spike: return "first_spike";
        case Regime::sub_threshold: return "sub_threshold";
    }
    return "?";
}

// alpha = log M / log N against the p-2 and p-1 thresholds
Regime regime_classifier(double N, int p, double M);

}  // namespace spikeflow
