#include "spikeflow/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikeflow/dynamics.hpp"
#include "spikeflow/errors.hpp"
#include "spikeflow/experiments.hpp"
#include "spikeflow/io.hpp"

namespace spikeflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool deterministic = false;
};

// locate a byte offset in the raw text for parse diagnostics
std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

json load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + e.what());
    }
}

// typed field access; every error names the full dotted path
const json* find(const json& obj, const std::string& scope, const std::string& key) {
    if (!obj.is_object()) throw ConfigError(scope + ": expected an object");
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double need_number(const json& obj, const std::string& scope, const std::string& key) {
    const json* v = find(obj, scope, key);
    if (!v || !v->is_number())
        throw ConfigError(scope + "." + key + ": expected a number");
    return v->get<double>();
}

double opt_number(const json& obj, const std::string& scope, const std::string& key,
                  double dflt) {
    const json* v = find(obj, scope, key);
    if (!v) return dflt;
    if (!v->is_number()) throw ConfigError(scope + "." + key + ": expected a number");
    return v->get<double>();
}

std::int64_t need_int(const json& obj, const std::string& scope, const std::string& key) {
    const json* v = find(obj, scope, key);
    if (!v || !v->is_number_integer())
        throw ConfigError(scope + "." + key + ": expected an integer");
    return v->get<std::int64_t>();
}

bool opt_bool(const json& obj, const std::string& scope, const std::string& key,
              bool dflt) {
    const json* v = find(obj, scope, key);
    if (!v) return dflt;
    if (!v->is_boolean()) throw ConfigError(scope + "." + key + ": expected a boolean");
    return v->get<bool>();
}

std::string opt_string(const json& obj, const std::string& scope, const std::string& key,
                       const std::string& dflt) {
    const json* v = find(obj, scope, key);
    if (!v) return dflt;
    if (!v->is_string()) throw ConfigError(scope + "." + key + ": expected a string");
    return v->get<std::string>();
}

Vector need_vector(const json& obj, const std::string& scope, const std::string& key) {
    const json* v = find(obj, scope, key);
    if (!v || !v->is_array())
        throw ConfigError(scope + "." + key + ": expected an array of numbers");
    Vector out(v->size());
    for (std::size_t k = 0; k < v->size(); ++k) {
        if (!(*v)[k].is_number())
            throw ConfigError(scope + "." + key + ": expected an array of numbers");
        out[static_cast<Eigen::Index>(k)] = (*v)[k].get<double>();
    }
    return out;
}

Matrix need_matrix(const json& obj, const std::string& scope, const std::string& key) {
    const json* v = find(obj, scope, key);
    if (!v || !v->is_array() || v->empty() || !(*v)[0].is_array())
        throw ConfigError(scope + "." + key + ": expected an array of number rows");
    const std::size_t cols = (*v)[0].size();
    Matrix out(v->size(), cols);
    for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_array() || (*v)[i].size() != cols)
            throw ConfigError(scope + "." + key + ": ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j) {
            if (!(*v)[i][j].is_number())
                throw ConfigError(scope + "." + key + ": expected numeric entries");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (*v)[i][j].get<double>();
        }
    }
    return out;
}

struct ModelSection {
    int p = 3;
    int r = 1;
    Eigen::Index N = 64;
    Vector lambdas;
    double sqrt_m = 1.0;
    double M = 1.0;
    bool noise = true;
    double memory_budget = 5e7;
};

ModelSection parse_model(const json& cfg) {
    const json* sec = find(cfg, "config", "model");
    if (!sec) throw ConfigError("config.model: missing section");
    ModelSection m;
    m.p = static_cast<int>(need_int(*sec, "model", "p"));
    m.r = static_cast<int>(need_int(*sec, "model", "r"));
    m.N = static_cast<Eigen::Index>(need_int(*sec, "model", "N"));
    m.lambdas = need_vector(*sec, "model", "lambdas");

    const bool has_sqrt_m = find(*sec, "model", "sqrt_m") != nullptr;
    const bool has_M = find(*sec, "model", "M") != nullptr;
    const bool has_alpha = find(*sec, "model", "alpha") != nullptr;
    if (has_sqrt_m + has_M + has_alpha != 1)
        throw ConfigError("model: exactly one of sqrt_m, M, alpha must be given");
    if (has_sqrt_m) {
        m.sqrt_m = need_number(*sec, "model", "sqrt_m");
        m.M = m.sqrt_m * m.sqrt_m;
    } else if (has_M) {
        m.M = need_number(*sec, "model", "M");
        if (!(m.M > 0.0)) throw ConfigError("model.M: must be positive");
        m.sqrt_m = std::sqrt(m.M);
    } else {
        const double alpha = need_number(*sec, "model", "alpha");
        m.M = std::pow(static_cast<double>(m.N), alpha);
        m.sqrt_m = std::sqrt(m.M);
    }
    m.noise = opt_bool(*sec, "model", "noise", true);
    m.memory_budget = opt_number(*sec, "model", "memory_budget", 5e7);
    return m;
}

struct InitSection {
    InitMode mode = InitMode::uniform;
    std::uint64_t seed = 1;
    std::optional<Matrix> m0;
};

InitSection parse_init(const json& cfg, const GlobalOpts& g) {
    InitSection init;
    const json* sec = find(cfg, "config", "init");
    if (sec) {
        const std::string mode = opt_string(*sec, "init", "mode", "uniform");
        if (mode == "uniform")
            init.mode = InitMode::uniform;
        else if (mode == "conditioned_positive")
            init.mode = InitMode::conditioned_positive;
        else if (mode == "explicit")
            init.mode = InitMode::explicit_m0;
        else
            throw ConfigError("init.mode: unknown mode '" + mode + "'");
        if (const json* s = find(*sec, "init", "seed")) {
            if (!s->is_number_unsigned() && !s->is_number_integer())
                throw ConfigError("init.seed: expected an unsigned integer");
            init.seed = s->get<std::uint64_t>();
        }
        if (init.mode == InitMode::explicit_m0) init.m0 = need_matrix(*sec, "init", "m0");
    }
    if (g.seed) init.seed = *g.seed;  // command line wins
    return init;
}

FlowConfig parse_flow(const json& cfg, const GlobalOpts& g) {
    FlowConfig flow;
    if (const json* sec = find(cfg, "config", "flow")) {
        flow.eta = opt_number(*sec, "flow", "eta", flow.eta);
        flow.t_max = opt_number(*sec, "flow", "t_max", flow.t_max);
        flow.sample_dt = opt_number(*sec, "flow", "sample_dt", flow.sample_dt);
        flow.stop_eps = opt_number(*sec, "flow", "stop_eps", flow.stop_eps);
        flow.max_steps = static_cast<std::uint64_t>(
            opt_number(*sec, "flow", "max_steps", static_cast<double>(flow.max_steps)));
        flow.deterministic_reduction =
            opt_bool(*sec, "flow", "deterministic_reduction", false);
        flow.record_noise_drift = opt_bool(*sec, "flow", "record_noise_drift", false);
    }
    if (!(flow.eta > 0.0) || !(flow.t_max > 0.0) || !(flow.sample_dt > 0.0) ||
        !(flow.stop_eps > 0.0 && flow.stop_eps < 1.0))
        throw ConfigError("flow: eta, t_max, sample_dt must be positive and stop_eps in (0,1)");
    flow.threads = std::max(1, g.threads);
    if (g.deterministic) flow.deterministic_reduction = true;
    return flow;
}

DetectParams parse_detect(const json& cfg) {
    DetectParams d;
    if (const json* sec = find(cfg, "config", "detect")) {
        d.eps = opt_number(*sec, "detect", "eps", d.eps);
        d.eps_prime = opt_number(*sec, "detect", "eps_prime", d.eps_prime);
    }
    if (!(d.eps > 0.0 && d.eps < 1.0)) throw ConfigError("detect.eps: must lie in (0,1)");
    return d;
}

struct OutputSection {
    std::string dir = ".";
    bool emit_svg = false;
    bool svg_log_time = false;
};

OutputSection parse_output(const json& cfg, const GlobalOpts& g) {
    OutputSection o;
    if (const json* sec = find(cfg, "config", "output")) {
        o.dir = opt_string(*sec, "output", "dir", o.dir);
        o.emit_svg = opt_bool(*sec, "output", "emit_svg", false);
        o.svg_log_time = opt_bool(*sec, "output", "svg_log_time", false);
    }
    if (!g.out_dir.empty()) o.dir = g.out_dir;
    std::error_code ec;
    fs::create_directories(o.dir, ec);
    if (ec) throw ConfigError("cannot create output dir " + o.dir);
    return o;
}

Matrix initial_correlations(const ModelSection& ms, const InitSection& init) {
    if (init.mode == InitMode::explicit_m0) {
        if (!init.m0) throw ConfigError("init.m0: missing");
        return *init.m0;
    }
    // law of the correlations of a uniform frame against fixed spikes
    Rng rng(derive_seed(init.seed, 3));
    for (int attempt = 0; attempt < 10 * (1 << std::min(ms.r * ms.r, 20)); ++attempt) {
        Matrix V = sample_uniform(ms.N, ms.r, rng).X;
        Matrix X = sample_uniform(ms.N, ms.r, rng).X;
        Matrix m = V.transpose() * X / static_cast<double>(ms.N);
        if (init.mode == InitMode::uniform || (m.array() > 0.0).all()) return m;
    }
    throw NumericalError("conditioned-positive rejection sampler stalled");
}

PredictionBundle build_prediction(const Matrix& m0, const ModelSection& ms,
                                  double hit_eps) {
    PredictionBundle pb;
    pb.I0 = init_matrix(m0, ms.lambdas, ms.p);
    pb.selection = greedy_selection(pb.I0);
    pb.r_c = static_cast<int>(pb.selection.pairs.size());
    const double sqN = std::sqrt(static_cast<double>(ms.N));
    for (const auto& pr : pb.selection.pairs) {
        pb.predicted_permutation.emplace_back(pr.i, pr.j);
        const double gamma = std::abs(m0(pr.i, pr.j)) * sqN;
        double t = 0.0;
        if (gamma < hit_eps * sqN)
            t = predict_hitting_heuristic(gamma, ms.lambdas[pr.i], ms.lambdas[pr.j],
                                          ms.p, hit_eps, static_cast<double>(ms.N));
        pb.t_original.push_back(t);
        pb.t_rescaled.push_back(t / ms.sqrt_m);
    }
    pb.regime = regime_classifier(static_cast<double>(ms.N), ms.p, ms.M);
    return pb;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << text << "\n";
}

int cmd_simulate(const GlobalOpts& g) {
    json cfg = load_config(g.config_path);
    ModelSection ms = parse_model(cfg);
    InitSection init = parse_init(cfg, g);
    FlowConfig flow = parse_flow(cfg, g);
    DetectParams detect = parse_detect(cfg);
    OutputSection outp = parse_output(cfg, g);

    ModelOptions mo;
    mo.memory_budget = ms.memory_budget;
    mo.noise = ms.noise;
    SpikedModel mod = generate(ms.p, ms.r, ms.N, ms.lambdas, ms.sqrt_m,
                               derive_seed(init.seed, 1), mo);
    Rng init_rng(derive_seed(init.seed, 2));
    const Matrix* m0p = init.m0 ? &*init.m0 : nullptr;
    StiefelPoint X0 = [&] {
        switch (init.mode) {
            case InitMode::uniform:
                return sample_uniform(ms.N, ms.r, init_rng);
            case InitMode::conditioned_positive: {
                for (int a = 0; a < 10 * (1 << std::min(ms.r * ms.r, 20)); ++a) {
                    StiefelPoint X = sample_uniform(ms.N, ms.r, init_rng);
                    if ((correlations(mod, X.X).array() > 0.0).all()) return X;
                }
                throw NumericalError("conditioned-positive rejection sampler stalled");
            }
            case InitMode::explicit_m0:
                if (!m0p) throw ConfigError("init.m0: missing");
                return stiefel_with_correlations(mod.V, *m0p, init_rng);
        }
        throw ConfigError("unknown init mode");
    }();

    PredictionBundle pb = build_prediction(correlations(mod, X0.X), ms, detect.eps);
    write_text((fs::path(outp.dir) / "prediction.json").string(), prediction_to_json(pb));
    save_model(mod, (fs::path(outp.dir) / "model.bin").string());

    const std::string traj_path = (fs::path(outp.dir) / "trajectory.csv").string();
    Trajectory traj;
    try {
        traj = integrate(mod, X0, flow);
    } catch (const IntegrationError& e) {
        if (!e.partial.snapshots.empty()) write_trajectory_csv(e.partial, traj_path);
        std::cerr << "integration failed: " << e.what() << " (partial trajectory kept)\n";
        throw;
    }
    write_trajectory_csv(traj, traj_path);

    const double ep = detect.eps_prime < 0.0 ? default_eps_prime(ms.N, ms.p)
                                             : detect.eps_prime;
    EliminationReport rep = detect_elimination(traj, detect.eps, ep);
    rep.matched_prediction = ordering_matches(rep, pb.predicted_permutation);
    write_text((fs::path(outp.dir) / "elimination.json").string(),
               elimination_to_json(rep));
    if (outp.emit_svg)
        write_svg(traj, pb.predicted_permutation,
                  (fs::path(outp.dir) / "trajectory.svg").string(), outp.svg_log_time);

    std::cout << "simulate: " << termination_name(traj.termination) << " after "
              << traj.steps << " steps, t = " << fmt17(traj.times.back()) << ", "
              << rep.ordering.size() << " crossings, prediction "
              << (rep.matched_prediction ? "matched" : "not matched") << "\n";
    return 0;
}

int cmd_population(const GlobalOpts& g) {
    json cfg = load_config(g.config_path);
    ModelSection ms = parse_model(cfg);
    InitSection init = parse_init(cfg, g);
    FlowConfig flow = parse_flow(cfg, g);
    DetectParams detect = parse_detect(cfg);
    OutputSection outp = parse_output(cfg, g);

    Matrix m0 = initial_correlations(ms, init);
    if (m0.rows() != ms.r || m0.cols() != ms.r)
        throw ConfigError("init.m0: expected an r x r matrix");

    // the deterministic reduction carries its own clock; sample count enters
    // only through the regime label of the prediction report
    Trajectory traj = integrate_population(m0, ms.lambdas, ms.p, 1.0, flow);
    write_trajectory_csv(traj, (fs::path(outp.dir) / "trajectory.csv").string());

    PredictionBundle pb = build_prediction(m0, ms, detect.eps);
    write_text((fs::path(outp.dir) / "prediction.json").string(), prediction_to_json(pb));

    const double ep = detect.eps_prime < 0.0 ? 0.05 : detect.eps_prime;
    EliminationReport rep = detect_elimination(traj, detect.eps, ep);
    rep.matched_prediction = ordering_matches(rep, pb.predicted_permutation);
    write_text((fs::path(outp.dir) / "elimination.json").string(),
               elimination_to_json(rep));
    if (outp.emit_svg)
        write_svg(traj, pb.predicted_permutation,
                  (fs::path(outp.dir) / "trajectory.svg").string(), outp.svg_log_time);

    std::cout << "population: " << termination_name(traj.termination) << " after "
              << traj.steps << " steps, " << rep.ordering.size()
              << " crossings, prediction "
              << (rep.matched_prediction ? "matched" : "not matched") << "\n";
    return 0;
}

int cmd_predict(const GlobalOpts& g) {
    json cfg = load_config(g.config_path);
    ModelSection ms = parse_model(cfg);
    InitSection init = parse_init(cfg, g);
    DetectParams detect = parse_detect(cfg);
    OutputSection outp = parse_output(cfg, g);

    Matrix m0 = initial_correlations(ms, init);
    PredictionBundle pb = build_prediction(m0, ms, detect.eps);
    write_text((fs::path(outp.dir) / "prediction.json").string(), prediction_to_json(pb));
    std::cout << "predict: " << pb.r_c << " pairs, regime " << regime_name(pb.regime)
              << "\n";
    return 0;
}

int cmd_concentration(const GlobalOpts& g, std::int64_t N, int r, int samples) {
    OutputSection outp;
    outp.dir = g.out_dir.empty() ? "." : g.out_dir;
    std::error_code ec;
    fs::create_directories(outp.dir, ec);
    if (ec) throw ConfigError("cannot create output dir " + outp.dir);

    ConcentrationResult res = concentration_experiment(
        static_cast<Eigen::Index>(N), r, samples, g.seed.value_or(1));

    std::ofstream tail(fs::path(outp.dir) / "tail.csv", std::ios::binary);
    tail << "t,tail_emp\n";
    for (std::size_t k = 0; k < res.t_grid.size(); ++k)
        tail << fmt17(res.t_grid[k]) << "," << fmt17(res.tail_emp[k]) << "\n";
    std::ofstream small(fs::path(outp.dir) / "smallball.csv", std::ios::binary);
    small << "t,p_emp\n";
    for (std::size_t k = 0; k < res.small_t.size(); ++k)
        small << fmt17(res.small_t[k]) << "," << fmt17(res.small_emp[k]) << "\n";

    std::cout << "concentration: N=" << N << " r=" << r << " samples=" << samples
              << " ks=" << fmt17(res.ks_m11) << " fit_c=" << fmt17(res.fit_c)
              << " fit_log_C=" << fmt17(res.fit_log_C) << "\n";
    return 0;
}

std::vector<double> number_list(const json& sec, const std::string& scope,
                                const std::string& key) {
    const json* v = find(sec, scope, key);
    if (!v) return {};
    if (v->is_number()) return {v->get<double>()};
    if (v->is_array()) {
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number())
                throw ConfigError(scope + "." + key + ": expected numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    throw ConfigError(scope + "." + key + ": expected a number or array");
}

int cmd_sweep(const GlobalOpts& g) {
    json cfg = load_config(g.config_path);
    const json* grid = find(cfg, "config", "grid");
    if (!grid) throw ConfigError("config.grid: missing section");

    auto ps = number_list(*grid, "grid", "p");
    auto rs = number_list(*grid, "grid", "r");
    auto Ns = number_list(*grid, "grid", "N");
    if (ps.empty() || rs.empty() || Ns.empty())
        throw ConfigError("grid: p, r, N are required");

    // lambdas: one vector or a list of vectors
    std::vector<Vector> lams;
    {
        const json* v = find(*grid, "grid", "lambdas");
        if (!v || !v->is_array() || v->empty())
            throw ConfigError("grid.lambdas: expected an array");
        if ((*v)[0].is_array()) {
            for (std::size_t k = 0; k < v->size(); ++k) {
                json wrap = json::object();
                wrap["lambdas"] = (*v)[k];
                lams.push_back(need_vector(wrap, "grid", "lambdas"));
            }
        } else {
            lams.push_back(need_vector(*grid, "grid", "lambdas"));
        }
    }

    auto sqrt_ms = number_list(*grid, "grid", "sqrt_m");
    auto Ms = number_list(*grid, "grid", "M");
    auto alphas = number_list(*grid, "grid", "alpha");
    const int given = !sqrt_ms.empty() + !Ms.empty() + !alphas.empty();
    if (given != 1)
        throw ConfigError("grid: exactly one of sqrt_m, M, alpha must be given");

    SweepSpec spec;
    for (double p : ps)
        for (double r : rs)
            for (double N : Ns)
                for (const Vector& lam : lams) {
                    auto add_cell = [&](double sm) {
                        RunSpec cell;
                        cell.p = static_cast<int>(p);
                        cell.r = static_cast<int>(r);
                        cell.N = static_cast<Eigen::Index>(N);
                        cell.lambdas = lam;
                        cell.sqrt_m = sm;
                        if (lam.size() != cell.r)
                            throw ConfigError("grid.lambdas: need one entry per spike");
                        spec.cells.push_back(cell);
                    };
                    for (double s : sqrt_ms) add_cell(s);
                    for (double M : Ms) add_cell(std::sqrt(M));
                    for (double a : alphas) add_cell(std::pow(N, 0.5 * a));
                }

    spec.seeds_per_cell = static_cast<int>(opt_number(cfg, "config", "seeds_per_cell", 10));
    InitSection init = parse_init(cfg, g);
    spec.init_mode = init.mode;
    if (init.m0) spec.explicit_m0 = *init.m0;
    spec.flow = parse_flow(cfg, g);
    spec.detect = parse_detect(cfg);
    spec.master_seed = init.seed;
    spec.threads = std::max(1, g.threads);
    if (g.deterministic) spec.threads = 1;
    if (const json* msec = find(cfg, "config", "model"))
        spec.memory_budget = opt_number(*msec, "model", "memory_budget", 5e7);
    OutputSection outp = parse_output(cfg, g);

    // cross-run parallelism and in-run parallelism would oversubscribe
    if (spec.threads > 1) spec.flow.threads = 1;

    std::vector<CellResult> results = recovery_sweep(spec);
    write_sweep_csv(results, (fs::path(outp.dir) / "sweep.csv").string());
    write_run_detail_csv(results, outp.dir);
    for (const auto& c : results)
        std::cout << "cell p=" << c.cell.p << " r=" << c.cell.r << " N=" << c.cell.N
                  << " sqrt_m=" << fmt17(c.cell.sqrt_m)
                  << ": recovery=" << fmt17(c.recovery_rate)
                  << " prediction_match=" << fmt17(c.prediction_match_rate) << "\n";
    return 0;
}

}  // namespace

int dispatch(int argc, char** argv) {
    GlobalOpts g;
    std::int64_t conc_N = 400;
    int conc_r = 2;
    int conc_samples = 10000;

    CLI::App app{"gradient-flow laboratory for multi-spike tensor estimation"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name
    app.add_option("--config", g.config_path, "JSON config path")->type_name("PATH");
    app.add_option("--out", g.out_dir, "output directory override")->type_name("DIR");
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "master seed override");
    app.add_option("--threads", g.threads, "worker thread count");
    app.add_flag("--deterministic", g.deterministic,
                 "bitwise-reproducible mode (serial reductions)");

    auto* sim = app.add_subcommand("simulate", "full-tensor gradient flow run");
    auto* pop = app.add_subcommand("population", "noise-free correlation flow");
    auto* pre = app.add_subcommand("predict", "selection and hitting-time report");
    auto* conc = app.add_subcommand("concentration", "uniform-measure statistics");
    conc->add_option("--N", conc_N, "ambient dimension");
    conc->add_option("--r", conc_r, "frame width");
    conc->add_option("--samples", conc_samples, "sample count");
    auto* swp = app.add_subcommand("sweep", "seeded recovery-rate grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (seed_opt->count() > 0) g.seed = seed_val;

    try {
        auto need_config = [&] {
            if (g.config_path.empty())
                throw ConfigError("this command needs --config <path>");
        };
        if (sim->parsed()) {
            need_config();
            return cmd_simulate(g);
        }
        if (pop->parsed()) {
            need_config();
            return cmd_population(g);
        }
        if (pre->parsed()) {
            need_config();
            return cmd_predict(g);
        }
        if (conc->parsed()) return cmd_concentration(g, conc_N, conc_r, conc_samples);
        if (swp->parsed()) {
            need_config();
            return cmd_sweep(g);
        }
        throw ConfigError("no command given");
    } catch (const BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const TieError& e) {
        std::cerr << "selection error: " << e.what() << "\n";
        return 3;
    } catch (const BlowupError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace spikeflow
