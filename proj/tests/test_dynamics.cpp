#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "spikeflow/dynamics.hpp"
#include "spikeflow/errors.hpp"
#include "spikeflow/population.hpp"

using namespace spikeflow;

namespace {

Vector lam21() {
    Vector l(2);
    l << 2.0, 1.0;
    return l;
}

Matrix hand_m0() {
    Matrix m(2, 2);
    m << 0.25, 0.1, 0.05, 0.2;
    return m;
}

SpikedModel noisy_model() { return generate(3, 2, 32, lam21(), 3.0, 61); }

SpikedModel quiet_model(Eigen::Index N) {
    ModelOptions opt;
    opt.noise = false;
    return generate(3, 2, N, lam21(), 1.0, 62, opt);
}

}  // namespace

TEST_CASE("the flow never leaves the manifold") {
    SpikedModel mod = noisy_model();
    Rng rng(17);
    StiefelPoint X0 = sample_uniform(mod.N, mod.r, rng);
    FlowConfig cfg;
    cfg.eta = 5e-3;
    cfg.t_max = 0.2;
    cfg.sample_dt = 0.02;
    Trajectory traj = integrate(mod, X0, cfg);
    CHECK(traj.steps > 20);
    CHECK(on_manifold(traj.terminal_X));
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
        CHECK(traj.snapshots[k].cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
}

TEST_CASE("the projected gradient is a descent direction for the landscape") {
    SpikedModel mod = noisy_model();
    Rng rng(19);
    StiefelPoint X = sample_uniform(mod.N, mod.r, rng);

    Matrix G = euclidean_risk_gradient(mod, X.X);
    TangentVector RG = project_tangent(X, G);
    const double g2 = RG.U.squaredNorm();
    REQUIRE(g2 > 0.0);

    // directional derivative along the retracted descent ray
    const double h = 1e-6;
    const double up = risk_value(mod, polar_retract(X, Matrix(-h * RG.U)).X);
    const double down = risk_value(mod, polar_retract(X, Matrix(h * RG.U)).X);
    const double deriv = (up - down) / (2.0 * h);
    CHECK(deriv == doctest::Approx(-g2).epsilon(1e-4));

    // fifty explicit steps mirror the integrator and must descend
    StiefelPoint Y = X;
    double prev = risk_value(mod, Y.X);
    for (int step = 0; step < 50; ++step) {
        Matrix Gs = euclidean_risk_gradient(mod, Y.X);
        TangentVector D = project_tangent(Y, Gs);
        const double dt = 1e-3 * std::sqrt((double)mod.N) / (1.0 + D.U.norm());
        Y = polar_retract(Y, Matrix(-dt * D.U));
        const double cur = risk_value(mod, Y.X);
        CHECK(cur <= prev + 1e-8 * std::abs(prev));
        prev = cur;
    }
}

TEST_CASE("halving the step rate halves the terminal error") {
    SpikedModel mod = quiet_model(32);
    Rng rng(23);
    StiefelPoint X0 = stiefel_with_correlations(mod.V, hand_m0(), rng);
    auto terminal_m = [&](double eta) {
        FlowConfig cfg;
        cfg.eta = eta;
        cfg.t_max = 0.3;
        cfg.sample_dt = 1.0;  // terminal snapshot only
        cfg.stop_eps = 1e-9;
        Trajectory traj = integrate(mod, X0, cfg);
        REQUIRE(traj.termination == Termination::horizon);
        return traj.snapshots.back();
    };
    Matrix ref = terminal_m(1e-4 / 8.0);
    const double e1 = (terminal_m(1e-4) - ref).cwiseAbs().maxCoeff();
    const double e2 = (terminal_m(1e-4 / 2.0) - ref).cwiseAbs().maxCoeff();
    const double order = std::log2(e1 / e2);
    CHECK(order >= 0.9);
    CHECK(order <= 1.6);
}

TEST_CASE("correlation-space surrogate replays the noise-free flow") {
    SpikedModel mod = quiet_model(64);
    Matrix m0 = hand_m0();
    Rng rng(29);
    StiefelPoint X0 = stiefel_with_correlations(mod.V, m0, rng);

    FlowConfig cfg;
    cfg.eta = 1e-3;
    cfg.t_max = 1.5;
    cfg.sample_dt = 0.05;
    cfg.stop_eps = 0.05;
    Trajectory full = integrate(mod, X0, cfg);
    Trajectory fast = evolve_correlations_only(mod, m0, cfg);

    REQUIRE(full.times.size() == fast.times.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < full.times.size(); ++k) {
        CHECK(full.times[k] == doctest::Approx(fast.times[k]).epsilon(1e-9));
        worst = std::max(worst,
                         (full.snapshots[k] - fast.snapshots[k]).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-4);   // contract
    CHECK(worst <= 1e-9);   // observed headroom, the two routes are one map
    CHECK(full.termination == fast.termination);
}

TEST_CASE("termination reasons reflect what stopped the flow") {
    SpikedModel mod = generate(3, 2, 32, lam21(), 200.0, 63);
    Rng rng(31);
    Matrix m0(2, 2);
    m0 << 0.3, 0.05, 0.05, 0.25;
    StiefelPoint X0 = stiefel_with_correlations(mod.V, m0, rng);

    FlowConfig cfg;
    cfg.eta = 1e-2;
    cfg.t_max = 5.0;
    cfg.sample_dt = 0.01;
    Trajectory rec = integrate(mod, X0, cfg);
    CHECK(rec.termination == Termination::recovered);
    CHECK(all_columns_matched(rec.snapshots.back(), cfg.stop_eps));
    CHECK(rec.times.back() < 5.0);

    FlowConfig cap = cfg;
    cap.max_steps = 5;
    Trajectory capped = integrate(mod, X0, cap);
    CHECK(capped.termination == Termination::step_cap);
    CHECK(capped.steps == 5);

    FlowConfig hor = cfg;
    hor.t_max = 1e-4;
    Trajectory horizon = integrate(mod, X0, hor);
    CHECK(horizon.termination == Termination::horizon);
    CHECK(horizon.times.back() == doctest::Approx(1e-4).epsilon(1e-9));
}

TEST_CASE("bad starts are rejected before integrating") {
    SpikedModel mod = noisy_model();
    Rng rng(37);
    StiefelPoint X0 = sample_uniform(mod.N, mod.r, rng);
    FlowConfig cfg;

    StiefelPoint off{Matrix(2.0 * X0.X)};
    CHECK_THROWS_AS(integrate(mod, off, cfg), ConfigError);
    StiefelPoint wrong{Matrix(X0.X.leftCols(1))};
    CHECK_THROWS_AS(integrate(mod, wrong, cfg), ConfigError);
    Matrix m_wrong(1, 1);
    m_wrong << 0.2;
    CHECK_THROWS_AS(evolve_correlations_only(mod, m_wrong, cfg), ConfigError);
}

TEST_CASE("a diverging step surfaces as an integration error with history") {
    SpikedModel mod = noisy_model();
    Rng rng(41);
    StiefelPoint X0 = sample_uniform(mod.N, mod.r, rng);
    FlowConfig cfg;
    // an unclipped infinite step puts NaN into the frame; the next gradient
    // evaluation must surface it instead of flowing on garbage
    cfg.eta = 1e308;
    cfg.t_max = std::numeric_limits<double>::infinity();
    cfg.sample_dt = 0.5;
    bool threw = false;
    try {
        integrate(mod, X0, cfg);
    } catch (const IntegrationError& e) {
        threw = true;
        CHECK_FALSE(e.partial.times.empty());
        CHECK(std::string(e.what()).size() > 0);
    }
    CHECK(threw);
}

TEST_CASE("the surrogate rejects correlation operators outside the ball") {
    SpikedModel mod = quiet_model(64);
    Matrix m0(2, 2);
    m0 << 0.8, 0.6, 0.6, 0.8;  // largest singular value 1.4
    FlowConfig cfg;
    CHECK_THROWS_AS(evolve_correlations_only(mod, m0, cfg), NumericalError);
}
