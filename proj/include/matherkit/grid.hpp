#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "matherkit/errors.hpp"
#include "matherkit/lagrangian.hpp"

namespace matherkit {

/// Space-time discretization of T^1 x T^d: n_q cells per configuration
/// dimension, n_t slices per period, and a transition speed cap.
struct Grid {
    int dim = 1;
    int n_q = 64;
    int n_t = 16;
    double v_max = 2.0;

    double dt() const { return 1.0 / n_t; }
    double dq() const { return 1.0 / n_q; }
    int n_cells() const { return dim == 1 ? n_q : n_q * n_q; }

    void validate() const {
        if (dim != 1 && dim != 2) throw Error("grid: dim must be 1 or 2");
        if (n_q < 8) throw Error("grid: n_q must be at least 8");
        if (n_t < 4) throw Error("grid: n_t must be at least 4");
        if (!(v_max > 0.0)) throw Error("grid: v_max must be positive");
        // nearest-image displacement must stay unambiguous
        if (v_max * dt() >= 0.5) throw Error("grid: v_max/n_t must be below 1/2");
    }

    std::array<int, 2> cell_index(int cell) const {
        if (dim == 1) return {cell, 0};
        return {cell / n_q, cell % n_q};
    }

    int flat_index(const std::array<int, 2>& idx) const {
        auto w = [this](int i) { return ((i % n_q) + n_q) % n_q; };
        if (dim == 1) return w(idx[0]);
        return w(idx[0]) * n_q + w(idx[1]);
    }

    Vec cell_center(int cell) const {
        auto idx = cell_index(cell);
        Vec q = {idx[0] * dq(), 0.0};
        if (dim == 2) q[1] = idx[1] * dq();
        return q;
    }

    /// Nearest cell to a position on the torus.
    int nearest_cell(const Vec& q) const {
        std::array<int, 2> idx = {0, 0};
        for (int i = 0; i < dim; ++i)
            idx[i] = int(std::lround(wrap_unit(q[i]) * n_q)) % n_q;
        return flat_index(idx);
    }
};

/// One admissible per-step displacement (in cells) and its velocity.
struct Transition {
    std::array<int, 2> step = {0, 0};
    Vec velocity = {0.0, 0.0};
};

/// All integer displacements with per-axis window |o| <= floor(v_max*dt*n_q)
/// and Euclidean speed at most v_max.
inline std::vector<Transition> build_transitions(const Grid& grid) {
    int w = int(std::floor(grid.v_max * grid.dt() * grid.n_q + 1e-9));
    if (w < 1) throw EmptyWindow(grid.v_max, grid.dt(), grid.dq());
    std::vector<Transition> moves;
    double cell_speed = grid.dq() / grid.dt();
    auto push = [&](int o0, int o1) {
        Vec v = {o0 * cell_speed, o1 * cell_speed};
        if (norm(v, grid.dim) <= grid.v_max + 1e-12)
            moves.push_back({{o0, o1}, v});
    };
    if (grid.dim == 1) {
        for (int o = -w; o <= w; ++o) push(o, 0);
    } else {
        for (int o0 = -w; o0 <= w; ++o0)
            for (int o1 = -w; o1 <= w; ++o1) push(o0, o1);
    }
    return moves;
}

} // namespace matherkit
