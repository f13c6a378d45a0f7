#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "matherkit/barrier.hpp"
#include "matherkit/conley.hpp"
#include "matherkit/errors.hpp"

namespace matherkit {

using ordered_json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; negative zero normalized away so that
/// reruns emit identical bytes.
inline std::string fmt_double(double x) {
    if (x == 0.0) x = 0.0;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double normalized(double x) { return x == 0.0 ? 0.0 : x; }

/// FNV-1a of a byte string; used for config fingerprints.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Write-then-rename: an interrupted run never leaves a torn file under the
/// final name.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string value_function_csv(const ValueFunction& u) {
    std::string out = u.grid.dim == 1 ? "t_idx,q_idx,u\n" : "t_idx,q_idx,q2_idx,u\n";
    for (int t = 0; t < u.grid.n_t; ++t)
        for (int c = 0; c < u.grid.n_cells(); ++c) {
            auto idx = u.grid.cell_index(c);
            out += std::to_string(t) + "," + std::to_string(idx[0]);
            if (u.grid.dim == 2) out += "," + std::to_string(idx[1]);
            out += "," + fmt_double(u.slices[t][c]) + "\n";
        }
    return out;
}

inline std::string barrier_csv(const BarrierTable& table) {
    std::string out = "src_idx,dst_idx,h\n";
    for (std::size_t i = 0; i < table.sources.size(); ++i)
        for (std::size_t j = 0; j < table.targets.size(); ++j)
            out += std::to_string(i) + "," + std::to_string(j) + "," +
                   fmt_double(table.h[i][j]) + "\n";
    return out;
}

inline std::string chain_edges_csv(const ChainGraph& g) {
    std::string out = "src,dst\n";
    for (int i = 0; i < g.node_count; ++i)
        for (int j : g.edges[i]) out += std::to_string(i) + "," + std::to_string(j) + "\n";
    return out;
}

inline ordered_json weak_kam_json(const WeakKamResult& wk) {
    ordered_json j;
    j["alpha"] = normalized(wk.alpha);
    j["residual"] = normalized(wk.residual);
    j["iters"] = wk.iters;
    j["grid"] = {{"dim", wk.u.grid.dim},
                 {"n_q", wk.u.grid.n_q},
                 {"n_t", wk.u.grid.n_t},
                 {"v_max", normalized(wk.u.grid.v_max)}};
    return j;
}

inline ordered_json aubry_json(const AubryDecomposition& dec) {
    ordered_json j;
    j["aubry"] = dec.aubry;
    j["classes"] = dec.classes;
    ordered_json quot = ordered_json::array();
    for (const auto& row : dec.quotient) {
        ordered_json r = ordered_json::array();
        for (double d : row) r.push_back(normalized(d));
        quot.push_back(r);
    }
    j["quotient"] = quot;
    j["tol_aubry"] = normalized(dec.tol_aubry);
    j["tol_class"] = normalized(dec.tol_class);
    return j;
}

inline ordered_json decomposition_json(double eps, const ChainDecomposition& dec) {
    ordered_json j;
    j["eps"] = normalized(eps);
    j["recurrent"] = dec.recurrent;
    j["components"] = dec.components;
    return j;
}

/// Minimal SVG scatter: axes plus one circle per point, one color per group.
/// The canvas maps [0,1)^2 data to a fixed viewport.
class SvgScatter {
public:
    SvgScatter(int width = 640, int height = 480) : width_(width), height_(height) {}

    void add_group(const std::string& color, const std::vector<std::pair<double, double>>& pts) {
        groups_.push_back({color, pts});
    }

    std::string render() const {
        std::string svg;
        svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
               std::to_string(width_) + "\" height=\"" + std::to_string(height_) + "\">\n";
        svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        // axes
        svg += "<line x1=\"40\" y1=\"" + std::to_string(height_ - 30) + "\" x2=\"" +
               std::to_string(width_ - 10) + "\" y2=\"" + std::to_string(height_ - 30) +
               "\" stroke=\"black\"/>\n";
        svg += "<line x1=\"40\" y1=\"10\" x2=\"40\" y2=\"" + std::to_string(height_ - 30) +
               "\" stroke=\"black\"/>\n";
        for (const auto& [color, pts] : groups_)
            for (const auto& [x, y] : pts) {
                double px = 40.0 + x * (width_ - 50);
                double py = (height_ - 30.0) - y * (height_ - 40);
                svg += "<circle cx=\"" + fmt_double(px) + "\" cy=\"" + fmt_double(py) +
                       "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
            }
        svg += "</svg>\n";
        return svg;
    }

private:
    int width_, height_;
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> groups_;
};

} // namespace matherkit
