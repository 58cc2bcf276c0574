#include "spikeflow/io.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spikeflow/errors.hpp"

namespace spikeflow {

std::string fmt17(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps \n as-is everywhere
    if (!out) throw ConfigError("cannot open " + path + " for writing");
    return out;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    if (traj.snapshots.empty()) throw ConfigError("refusing to write an empty trajectory");
    const Eigen::Index r_rows = traj.snapshots.front().rows();
    const Eigen::Index r_cols = traj.snapshots.front().cols();
    const bool drift = traj.noise_drift_snapshots.size() == traj.snapshots.size();

    std::ofstream out = open_for_write(path);
    out << "t";
    for (Eigen::Index i = 0; i < r_rows; ++i)
        for (Eigen::Index j = 0; j < r_cols; ++j)
            out << ",m_" << (i + 1) << "_" << (j + 1);
    if (drift)
        for (Eigen::Index i = 0; i < r_rows; ++i)
            for (Eigen::Index j = 0; j < r_cols; ++j)
                out << ",d_" << (i + 1) << "_" << (j + 1);
    out << "\n";
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        out << fmt17(traj.times[k]);
        for (Eigen::Index i = 0; i < r_rows; ++i)
            for (Eigen::Index j = 0; j < r_cols; ++j)
                out << "," << fmt17(traj.snapshots[k](i, j));
        if (drift)
            for (Eigen::Index i = 0; i < r_rows; ++i)
                for (Eigen::Index j = 0; j < r_cols; ++j)
                    out << "," << fmt17(traj.noise_drift_snapshots[k](i, j));
        out << "\n";
    }
    if (!out) throw ConfigError("short write to " + path);
}

Trajectory read_trajectory_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty trajectory file " + path);

    // header tells us the matrix shape and whether drift columns exist
    Eigen::Index r_rows = 0, r_cols = 0;
    std::size_t n_m = 0, n_d = 0;
    {
        std::stringstream ss(line);
        std::string tok;
        if (!std::getline(ss, tok, ',') || tok != "t")
            throw ConfigError("bad trajectory header in " + path);
        while (std::getline(ss, tok, ',')) {
            int i = 0, j = 0;
            if (std::sscanf(tok.c_str(), "m_%d_%d", &i, &j) == 2) {
                ++n_m;
                r_rows = std::max<Eigen::Index>(r_rows, i);
                r_cols = std::max<Eigen::Index>(r_cols, j);
            } else if (std::sscanf(tok.c_str(), "d_%d_%d", &i, &j) == 2) {
                ++n_d;
            } else {
                throw ConfigError("unknown trajectory column '" + tok + "' in " + path);
            }
        }
    }
    if (n_m != static_cast<std::size_t>(r_rows * r_cols) || (n_d != 0 && n_d != n_m))
        throw ConfigError("inconsistent trajectory header in " + path);

    Trajectory traj;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str()) throw ConfigError("bad number '" + tok + "' in " + path);
            vals.push_back(v);
        }
        if (vals.size() != 1 + n_m + n_d)
            throw ConfigError("row width mismatch in " + path);
        traj.times.push_back(vals[0]);
        Matrix m(r_rows, r_cols);
        std::size_t k = 1;
        for (Eigen::Index i = 0; i < r_rows; ++i)
            for (Eigen::Index j = 0; j < r_cols; ++j) m(i, j) = vals[k++];
        traj.snapshots.push_back(std::move(m));
        if (n_d) {
            Matrix d(r_rows, r_cols);
            for (Eigen::Index i = 0; i < r_rows; ++i)
                for (Eigen::Index j = 0; j < r_cols; ++j) d(i, j) = vals[k++];
            traj.noise_drift_snapshots.push_back(std::move(d));
        }
    }
    if (traj.snapshots.empty()) throw ConfigError("no data rows in " + path);
    traj.peak_m = Matrix::Zero(r_rows, r_cols);
    traj.peak_abs_m = Matrix::Zero(r_rows, r_cols);
    for (const auto& snap : traj.snapshots)
        for (Eigen::Index idx = 0; idx < snap.size(); ++idx)
            if (std::abs(snap(idx)) > traj.peak_abs_m(idx)) {
                traj.peak_abs_m(idx) = std::abs(snap(idx));
                traj.peak_m(idx) = snap(idx);
            }
    return traj;
}

std::string elimination_to_json(const EliminationReport& rep) {
    nlohmann::json j;
    j["ordering"] = nlohmann::json::array();
    for (const auto& e : rep.ordering)
        j["ordering"].push_back({{"i", e.i + 1}, {"j", e.j + 1}, {"T", e.T}});
    j["suppressed"] = nlohmann::json::object();
    for (std::size_t k = 0; k < rep.ordering.size(); ++k) {
        const auto& e = rep.ordering[k];
        j["suppressed"][std::to_string(e.i + 1) + "_" + std::to_string(e.j + 1)] =
            rep.suppressed_max[k];
    }
    j["transients"] = nlohmann::json::array();
    for (const auto& e : rep.transients)
        j["transients"].push_back({{"i", e.i + 1}, {"j", e.j + 1}, {"T", e.T}});
    j["matched_prediction"] = rep.matched_prediction;
    j["eps"] = rep.eps;
    j["eps_prime"] = rep.eps_prime;
    return j.dump(2);
}

std::string prediction_to_json(const PredictionBundle& pb) {
    nlohmann::json j;
    j["I0"] = matrix_to_json(pb.I0);
    j["selection"] = nlohmann::json::array();
    for (const auto& pr : pb.selection.pairs)
        j["selection"].push_back({{"i", pr.i + 1}, {"j", pr.j + 1}, {"value", pr.value}});
    j["r_c"] = pb.r_c;
    j["predicted_permutation"] = nlohmann::json::array();
    for (const auto& pr : pb.predicted_permutation)
        j["predicted_permutation"].push_back({pr.first + 1, pr.second + 1});
    j["predicted_hitting_times"] = nlohmann::json::array();
    for (std::size_t k = 0; k < pb.predicted_permutation.size(); ++k) {
        const auto& pr = pb.predicted_permutation[k];
        j["predicted_hitting_times"].push_back({{"i", pr.first + 1},
                                                {"j", pr.second + 1},
                                                {"t_original", pb.t_original[k]},
                                                {"t_rescaled", pb.t_rescaled[k]}});
    }
    j["regime"] = regime_name(pb.regime);
    return j.dump(2);
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string cell_tag(const RunSpec& cell) {
    std::string canon = "p=" + std::to_string(cell.p) + ";r=" + std::to_string(cell.r) +
                        ";N=" + std::to_string(cell.N) + ";sqrt_m=" + fmt17(cell.sqrt_m) +
                        ";lam=";
    for (Eigen::Index i = 0; i < cell.lambdas.size(); ++i) {
        if (i) canon += ",";
        canon += fmt17(cell.lambdas[i]);
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(canon));
    return buf;
}

}  // namespace

void write_sweep_csv(const std::vector<CellResult>& cells, const std::string& path) {
    if (cells.empty()) throw ConfigError("no sweep cells to write");
    const int r = cells.front().cell.r;
    std::ofstream out = open_for_write(path);
    out << "p,r,N,M";
    for (int i = 1; i <= r; ++i) out << ",lambda_" << i;
    out << ",seeds,recovery_rate,prediction_match_rate";
    for (int i = 1; i <= r; ++i) out << ",spike_rate_" << i;
    for (int i = 1; i <= r; ++i) out << ",mean_T_" << i;
    out << "\n";
    for (const auto& c : cells) {
        if (c.cell.r != r)
            throw ConfigError("sweep CSV needs a uniform spike count across cells");
        out << c.cell.p << "," << c.cell.r << "," << c.cell.N << ","
            << fmt17(c.cell.sqrt_m * c.cell.sqrt_m);
        for (int i = 0; i < r; ++i) out << "," << fmt17(c.cell.lambdas[i]);
        out << "," << c.runs.size() << "," << fmt17(c.recovery_rate) << ","
            << fmt17(c.prediction_match_rate);
        for (int i = 0; i < r; ++i) out << "," << fmt17(c.spike_rate[i]);
        for (int i = 0; i < r; ++i) out << "," << fmt17(c.mean_T[i]);
        out << "\n";
    }
}

void write_run_detail_csv(const std::vector<CellResult>& cells, const std::string& dir) {
    namespace fs = std::filesystem;
    for (const auto& c : cells) {
        const fs::path sub = fs::path(dir) / ("cell_" + cell_tag(c.cell));
        std::error_code ec;
        fs::create_directories(sub, ec);
        if (ec) throw ConfigError("cannot create " + sub.string());
        std::ofstream out = open_for_write((sub / "runs.csv").string());
        out << "seed,ok,error,recovered,order_match,perm_match,termination";
        for (int i = 1; i <= c.cell.r; ++i) out << ",T_" << i;
        out << ",wall_s\n";
        for (const auto& run : c.runs) {
            std::string err = run.error;
            for (char& ch : err)
                if (ch == ',' || ch == '\n') ch = ';';
            out << run.seed << "," << (run.ok ? 1 : 0) << "," << err << ","
                << (run.recovered ? 1 : 0) << "," << (run.order_match ? 1 : 0) << ","
                << (run.perm_match ? 1 : 0) << "," << termination_name(run.termination);
            for (int i = 0; i < c.cell.r; ++i) out << "," << fmt17(run.spike_T[i]);
            out << "," << fmt17(run.wall_s) << "\n";
        }
    }
}

namespace {

// axis mapping helpers for the SVG plot
struct AxisMap {
    double lo = 0.0, hi = 1.0, px0 = 0.0, px1 = 1.0;
    double operator()(double v) const {
        return px0 + (v - lo) / (hi - lo) * (px1 - px0);
    }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf", "#bcbd22"};

}  // namespace

void write_svg(const Trajectory& traj,
               const std::vector<std::pair<int, int>>& highlight,
               const std::string& path, bool log_time) {
    if (traj.snapshots.empty()) throw ConfigError("refusing to plot an empty trajectory");
    const Eigen::Index r_rows = traj.snapshots.front().rows();
    const Eigen::Index r_cols = traj.snapshots.front().cols();

    const double W = 960, H = 560, ml = 60, mr = 170, mt = 30, mb = 50;
    double t_lo = traj.times.front(), t_hi = traj.times.back();
    if (log_time) {
        // skip t = 0 on a log axis; fall back to linear for degenerate spans
        double first_pos = 0.0;
        for (double t : traj.times)
            if (t > 0.0) {
                first_pos = t;
                break;
            }
        if (first_pos > 0.0 && t_hi > first_pos) {
            t_lo = std::log10(first_pos);
            t_hi = std::log10(t_hi);
        } else {
            log_time = false;
        }
    }
    if (t_hi <= t_lo) t_hi = t_lo + 1.0;
    AxisMap xm{t_lo, t_hi, ml, W - mr};
    AxisMap ym{0.0, 1.05, H - mb, mt};

    std::ofstream out = open_for_write(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
        << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
        << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double y = ym(frac);
        out << "<line x1=\"" << ml - 4 << "\" y1=\"" << y << "\" x2=\"" << ml
            << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"12\">" << frac << "</text>\n";
        const double tv = t_lo + frac * (t_hi - t_lo);
        const double x = xm(tv);
        out << "<line x1=\"" << x << "\" y1=\"" << H - mb << "\" x2=\"" << x
            << "\" y2=\"" << H - mb + 4 << "\" stroke=\"black\"/>\n";
        char lbl[32];
        std::snprintf(lbl, sizeof lbl, "%.3g", log_time ? std::pow(10.0, tv) : tv);
        out << "<text x=\"" << x << "\" y=\"" << H - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"12\">" << lbl << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">t" << (log_time ? " (log)" : "")
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
        << "\" font-size=\"13\" transform=\"rotate(-90 16 " << (mt + H - mb) / 2
        << ")\" text-anchor=\"middle\">|m_ij|</text>\n";

    int color_idx = 0;
    double legend_y = mt + 10;
    for (Eigen::Index i = 0; i < r_rows; ++i)
        for (Eigen::Index j = 0; j < r_cols; ++j) {
            const bool heavy =
                std::find(highlight.begin(), highlight.end(),
                          std::make_pair(static_cast<int>(i), static_cast<int>(j))) !=
                highlight.end();
            const char* color = kPalette[color_idx % 9];
            ++color_idx;
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
                << (heavy ? 2.5 : 1.0) << "\" opacity=\"" << (heavy ? 1.0 : 0.55)
                << "\" points=\"";
            for (std::size_t k = 0; k < traj.times.size(); ++k) {
                double tv = traj.times[k];
                if (log_time) {
                    if (tv <= 0.0) continue;
                    tv = std::log10(tv);
                }
                out << xm(tv) << "," << ym(std::min(1.05, std::abs(traj.snapshots[k](i, j))))
                    << " ";
            }
            out << "\"/>\n";
            out << "<line x1=\"" << W - mr + 12 << "\" y1=\"" << legend_y << "\" x2=\""
                << W - mr + 36 << "\" y2=\"" << legend_y << "\" stroke=\"" << color
                << "\" stroke-width=\"" << (heavy ? 2.5 : 1.0) << "\"/>\n";
            out << "<text x=\"" << W - mr + 42 << "\" y=\"" << legend_y + 4
                << "\" font-size=\"12\">m_" << (i + 1) << "_" << (j + 1)
                << (heavy ? " *" : "") << "</text>\n";
            legend_y += 16;
        }
    out << "</svg>\n";
}

}  // namespace spikeflow
