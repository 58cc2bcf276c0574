#include "spikeflow/model.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "spikeflow/errors.hpp"
#include "spikeflow/population.hpp"

namespace spikeflow {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Entrywise integer power; the exponents here are small (p-1, p) and pow()
// would dominate the population drift otherwise.
Matrix int_pow(const Matrix& m, int k) {
    Matrix out = Matrix::Ones(m.rows(), m.cols());
    for (int s = 0; s < k; ++s) out = out.cwiseProduct(m);
    return out;
}

double pow_entries(Eigen::Index N, int p) {
    return std::pow(static_cast<double>(N), static_cast<double>(p));
}

// out = A * X computed in fixed row chunks. Thread count only changes which
// worker evaluates a chunk, never the arithmetic inside it, so results are
// bitwise identical for any thread count.
constexpr Eigen::Index kChunkRows = 8192;

template <typename Lhs>
void chunked_product(const Lhs& A, const Matrix& X, Matrix& out, int threads) {
    const Eigen::Index rows = A.rows();
    const Eigen::Index n_chunks = (rows + kChunkRows - 1) / kChunkRows;
    auto do_chunk = [&](Eigen::Index c) {
        const Eigen::Index r0 = c * kChunkRows;
        const Eigen::Index len = std::min(kChunkRows, rows - r0);
        out.middleRows(r0, len).noalias() = A.middleRows(r0, len) * X;
    };
    if (threads <= 1 || n_chunks <= 1) {
        for (Eigen::Index c = 0; c < n_chunks; ++c) do_chunk(c);
        return;
    }
    std::atomic<Eigen::Index> next{0};
    auto worker = [&] {
        for (;;) {
            Eigen::Index c = next.fetch_add(1);
            if (c >= n_chunks) return;
            do_chunk(c);
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(threads, static_cast<int>(n_chunks));
    pool.reserve(n_workers);
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// Contract the last remaining slot of a flat row-major tensor with x.
Vector chain_last(const Vector& in, Eigen::Index N, const Vector& x) {
    RowMajorMap A(in.data(), in.size() / N, N);
    return A * x;
}

// Contract the first remaining slot.
Vector chain_first(const Vector& in, Eigen::Index N, const Vector& x) {
    RowMajorMap A(in.data(), N, in.size() / N);
    return A.transpose() * x;
}

// F1(:, j) = W contracted with x_j on the last slot; one pass over W.
Matrix forward_contraction(const SpikedModel& mod, const Matrix& X, int threads) {
    const Eigen::Index N = mod.N;
    const Eigen::Index fibers = static_cast<Eigen::Index>(mod.W.size()) / N;
    RowMajorMap Wm(mod.W.data(), fibers, N);
    Matrix F1(fibers, X.cols());
    chunked_product(Wm, X, F1, threads);
    return F1;
}

// B1(:, j) = W contracted with x_j on the first slot; one pass over W.
Matrix backward_contraction(const SpikedModel& mod, const Matrix& X, int threads) {
    const Eigen::Index N = mod.N;
    const Eigen::Index fibers = static_cast<Eigen::Index>(mod.W.size()) / N;
    RowMajorMap Wm(mod.W.data(), N, fibers);
    Matrix B1(fibers, X.cols());
    chunked_product(Wm.transpose(), X, B1, threads);
    return B1;
}

}  // namespace

SpikedModel generate(int p, int r, Eigen::Index N, const Vector& lambdas,
                     double sqrt_m, std::uint64_t seed, const ModelOptions& opts) {
    if (p < 3) throw ConfigError("tensor order p must be at least 3");
    if (N < 1) throw ConfigError("dimension N must be positive");
    if (r < 1 || r > N) throw ConfigError("need 1 <= r <= N spikes");
    if (lambdas.size() != r) throw ConfigError("need one strength per spike");
    if (!(sqrt_m > 0.0)) throw ConfigError("sample rescaling sqrt_m must be positive");
    for (int i = 0; i < r; ++i) {
        if (!(lambdas[i] >= 0.0)) throw ConfigError("spike strengths must be non-negative");
        if (i > 0 && lambdas[i] > lambdas[i - 1] + 1e-15)
            throw ConfigError("spike strengths must be non-increasing");
    }
    if (opts.noise && pow_entries(N, p) > opts.memory_budget)
        throw BudgetError("noise tensor needs " + std::to_string(pow_entries(N, p)) +
                          " entries, budget is " + std::to_string(opts.memory_budget));

    SpikedModel mod;
    mod.p = p;
    mod.r = r;
    mod.N = N;
    mod.lambdas = lambdas;
    mod.sqrt_m = sqrt_m;
    mod.seed = seed;

    Rng rng_v(derive_seed(seed, 0));
    mod.V = sample_uniform(N, r, rng_v).X;

    if (opts.noise) {
        const auto n_entries = static_cast<std::size_t>(pow_entries(N, p));
        mod.W.resize(n_entries);
        Rng rng_w(derive_seed(seed, 1));
        fill_gaussian(mod.W.data(), n_entries, rng_w);
    }
    return mod;
}

double h0_value(const SpikedModel& mod, const Matrix& X) {
    if (!mod.noise_enabled()) return 0.0;
    const Eigen::Index N = mod.N;
    Matrix F1 = forward_contraction(mod, X, 1);
    double acc = 0.0;
    for (int j = 0; j < mod.r; ++j) {
        Vector cur = F1.col(j);
        for (int s = 0; s < mod.p - 2; ++s) cur = chain_last(cur, N, X.col(j));
        acc += mod.lambdas[j] * cur.dot(X.col(j));
    }
    return acc * std::pow(static_cast<double>(N), -0.5 * (mod.p - 1));
}

double risk_value(const SpikedModel& mod, const Matrix& X) {
    Matrix m = correlations(mod, X);
    Matrix mp = Matrix::Ones(m.rows(), m.cols());
    for (int s = 0; s < mod.p; ++s) mp = mp.cwiseProduct(m);
    const double planted =
        (mod.lambdas * mod.lambdas.transpose()).cwiseProduct(mp).sum();
    return h0_value(mod, X) - mod.sqrt_m * static_cast<double>(mod.N) * planted;
}

Matrix noise_euclidean_gradient(const SpikedModel& mod, const Matrix& X,
                                int threads, bool sequential) {
    const Eigen::Index N = mod.N;
    if (!mod.noise_enabled()) return Matrix::Zero(N, X.cols());
    if (sequential) threads = 1;

    Matrix F1 = forward_contraction(mod, X, threads);
    Matrix B1 = backward_contraction(mod, X, threads);

    const double scale = std::pow(static_cast<double>(N), -0.5 * (mod.p - 1));
    Matrix G(N, X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const Vector& x = X.col(j);
        // slot 1: everything after the first index already reduced from F1
        Vector g1 = F1.col(j);
        for (int s = 0; s < mod.p - 2; ++s) g1 = chain_last(g1, N, x);
        Vector g = g1;
        // slots 2..p-1 share prefix contractions; `cur` has slots s..p live
        Vector cur = B1.col(j);
        for (int s = 2; s <= mod.p - 1; ++s) {
            Vector gs = cur;
            for (int k = 0; k < mod.p - s; ++k) gs = chain_last(gs, N, x);
            g += gs;
            cur = chain_first(cur, N, x);
        }
        // after the loop `cur` has only the last slot live
        g += cur;
        G.col(j) = (mod.lambdas[static_cast<int>(j)] * scale) * g;
    }
    return G;
}

Matrix signal_euclidean_gradient(const SpikedModel& mod, const Matrix& X) {
    Matrix m = correlations(mod, X);
    Matrix C = (mod.lambdas * mod.lambdas.transpose())
                   .cwiseProduct(int_pow(m, mod.p - 1));
    return (-mod.sqrt_m * mod.p) * (mod.V * C);
}

Matrix euclidean_risk_gradient(const SpikedModel& mod, const Matrix& X, int threads) {
    return noise_euclidean_gradient(mod, X, threads) + signal_euclidean_gradient(mod, X);
}

Matrix noise_drift(const SpikedModel& mod, const Matrix& X, int threads) {
    Matrix Gn = noise_euclidean_gradient(mod, X, threads);
    StiefelPoint P{X};
    Matrix PG = project_tangent(P, Gn).U;
    return -(mod.V.transpose() * PG) / static_cast<double>(mod.N);
}

Matrix generator_m(const SpikedModel& mod, const Matrix& X, int threads) {
    Matrix m = correlations(mod, X);
    return noise_drift(mod, X, threads) +
           mod.sqrt_m * population_rhs(m, mod.lambdas, mod.p);
}

namespace {

void bswap_in_place(std::vector<double>& buf) {
    for (double& d : buf) {
        std::uint64_t u;
        std::memcpy(&u, &d, 8);
        u = __builtin_bswap64(u);
        std::memcpy(&d, &u, 8);
    }
}

}  // namespace

void save_model(const SpikedModel& mod, const std::string& path) {
    nlohmann::json hdr;
    hdr["format"] = "spikeflow-model";
    hdr["version"] = 1;
    hdr["p"] = mod.p;
    hdr["r"] = mod.r;
    hdr["N"] = static_cast<std::int64_t>(mod.N);
    hdr["lambdas"] = std::vector<double>(mod.lambdas.data(),
                                         mod.lambdas.data() + mod.lambdas.size());
    hdr["sqrt_m"] = mod.sqrt_m;
    hdr["seed"] = mod.seed;
    hdr["noise"] = mod.noise_enabled();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    out << hdr.dump() << "\n";
    // spike frame as little-endian f64, column-major
    std::vector<double> buf(mod.V.data(), mod.V.data() + mod.V.size());
    if constexpr (std::endian::native == std::endian::big) bswap_in_place(buf);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!out) throw ConfigError("short write to " + path);
}

SpikedModel load_model(const std::string& path, const ModelOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("missing header in " + path);
    nlohmann::json hdr;
    try {
        hdr = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("bad model header in " + path + ": " + e.what());
    }
    if (hdr.value("format", "") != "spikeflow-model")
        throw ConfigError(path + " is not a model file");

    const int p = hdr.at("p").get<int>();
    const int r = hdr.at("r").get<int>();
    const auto N = static_cast<Eigen::Index>(hdr.at("N").get<std::int64_t>());
    auto lam = hdr.at("lambdas").get<std::vector<double>>();
    Vector lambdas = Eigen::Map<Vector>(lam.data(), static_cast<Eigen::Index>(lam.size()));
    ModelOptions eff = opts;
    eff.noise = hdr.at("noise").get<bool>();

    SpikedModel mod = generate(p, r, N, lambdas, hdr.at("sqrt_m").get<double>(),
                               hdr.at("seed").get<std::uint64_t>(), eff);

    // stored frame wins over the regenerated one (same seed gives the same
    // bits, but the file is the source of truth)
    std::vector<double> buf(static_cast<std::size_t>(N) * r);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(double)))
        throw ConfigError("truncated spike frame in " + path);
    if constexpr (std::endian::native == std::endian::big) bswap_in_place(buf);
    mod.V = Eigen::Map<Matrix>(buf.data(), N, r);
    if (orth_defect(mod.V) > 100 * kOrthTol)
        throw NumericalError("stored spike frame is not orthogonal");
    return mod;
}

}  // namespace spikeflow
