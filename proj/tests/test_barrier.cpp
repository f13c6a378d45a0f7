#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "matherkit/experiments.hpp"

using namespace matherkit;

namespace {

LagrangianSpec free_particle() {
    LagrangianSpec spec;
    spec.potential = zero_potential();
    return spec;
}

LagrangianSpec pendulum(double amplitude = 1.0) {
    LagrangianSpec spec;
    spec.potential = cosine_potential(amplitude);
    return spec;
}

LagrangianSpec double_well(double amplitude) {
    LagrangianSpec spec;
    spec.potential = double_well_potential(amplitude);
    return spec;
}

std::vector<SamplePoint> spread_samples(const Grid& grid, int count) {
    std::vector<SamplePoint> s;
    for (int i = 0; i < count; ++i) s.push_back({0, i * grid.n_cells() / count});
    return s;
}

// Independent oracle: the Maupertuis length 2*integral sqrt(2(maxV-V)) between
// the two maxima of the double well, by Simpson quadrature.
double double_well_quotient_oracle(double amplitude) {
    auto integrand = [&](double q) {
        double v = amplitude * std::cos(4.0 * std::numbers::pi * q);
        return std::sqrt(2.0 * (amplitude - v));
    };
    int n = 2000;
    double h = 0.5 / n, sum = integrand(0.0) + integrand(0.5);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * integrand(i * h);
    return 2.0 * sum * h / 3.0;
}

} // namespace

TEST_CASE("free particle barrier vanishes with the horizon", "[barrier]") {
    Grid grid{1, 256, 4, 1.0};
    CostModel model(free_particle(), grid);
    auto samples = spread_samples(grid, 16);
    BarrierTable table = compute_barrier(model, 0.0, samples, samples, 16, 64);
    double floor = 0.25 * grid.n_t / double(grid.n_q); // lattice crawl cost
    for (const auto& row : table.h)
        for (double h : row) {
            CHECK(h >= -1e-12);
            CHECK(h <= floor + 1e-9);
        }
    // barrier window minimum is nonincreasing in T_max
    BarrierTable longer = compute_barrier(model, 0.0, samples, samples, 16, 96);
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = 0; j < samples.size(); ++j)
            CHECK(longer.h[i][j] <= table.h[i][j] + 1e-15);
}

TEST_CASE("pendulum barrier diagonal detects the Aubry fiber", "[barrier]") {
    Grid grid{1, 256, 16, 2.5};
    CostModel model(pendulum(), grid);
    WeakKamResult wk = solve_weak_kam(model);
    auto samples = spread_samples(grid, 32);
    BarrierTable table = compute_barrier(model, wk.alpha, samples, samples, 4, 16);

    CHECK(std::abs(table.h[0][0]) < 1e-8); // q = 0 is static
    for (std::size_t i = 1; i < samples.size(); ++i) {
        double q = grid.cell_center(samples[i].cell)[0];
        if (circle_dist(q, 0.0) > 0.1) CHECK(table.h[i][i] > 0.05);
    }

    SECTION("barrier dominates solution increments") {
        for (std::size_t i = 0; i < samples.size(); ++i)
            for (std::size_t j = 0; j < samples.size(); ++j) {
                double du = wk.u.slices[0][samples[j].cell] - wk.u.slices[0][samples[i].cell];
                CHECK(du <= table.h[i][j] + 1e-6);
            }
    }
}

TEST_CASE("window too short is detected", "[barrier]") {
    Grid grid{1, 128, 8, 2.5};
    CostModel model(pendulum(), grid);
    WeakKamResult wk = solve_weak_kam(model);
    auto samples = spread_samples(grid, 8);
    CHECK_THROWS_AS(
        compute_barrier(model, wk.alpha, samples, samples, 1, 2, false, 1e-6),
        WindowTooShort);
}

TEST_CASE("barrier-based weak KAM solution", "[barrier]") {
    Grid grid{1, 256, 8, 1.2};
    LagrangianSpec spec = pendulum(0.1);
    CostModel model(spec, grid);
    WeakKamResult wk = solve_weak_kam(model);
    std::vector<SamplePoint> sources = {{0, 0}};
    BarrierTable table = compute_barrier(model, wk.alpha, sources, sources, 8, 32, true);

    ValueFunction u = weak_kam_from_barrier(table, 0);

    SECTION("it satisfies the domination inequality") {
        auto rep = check_dominated(u, model, wk.alpha);
        CHECK(rep.max_defect <= 1e-3);
    }
    SECTION("it agrees with the solver solution up to a constant") {
        double offset = u.slices[0][0] - wk.u.slices[0][0];
        double worst = 0.0;
        for (int t = 0; t < grid.n_t; ++t)
            for (int c = 0; c < grid.n_cells(); ++c)
                worst = std::max(worst,
                                 std::abs(u.slices[t][c] - wk.u.slices[t][c] - offset));
        CHECK(worst < 5e-3);
    }
    SECTION("coverage gap without full fields") {
        BarrierTable bare = compute_barrier(model, wk.alpha, sources, sources, 8, 32);
        CHECK_THROWS_AS(weak_kam_from_barrier(bare, 0), CoverageGap);
    }
    SECTION("the free-particle field vanishes up to the lattice floor") {
        Grid fgrid{1, 256, 4, 1.0};
        CostModel fmodel(free_particle(), fgrid);
        std::vector<SamplePoint> src = {{0, 0}};
        BarrierTable ftable = compute_barrier(fmodel, 0.0, src, src, 16, 64, true);
        ValueFunction fu = weak_kam_from_barrier(ftable, 0);
        for (const auto& slice : fu.slices)
            for (double x : slice) {
                CHECK(x >= -1e-12);
                CHECK(x <= 5e-3);
            }
    }
}

TEST_CASE("aubry decomposition across the model zoo", "[barrier]") {
    SECTION("free particle: everything static, one class") {
        Grid grid{1, 256, 4, 1.0};
        CostModel model(free_particle(), grid);
        auto samples = spread_samples(grid, 16);
        BarrierTable table = compute_barrier(model, 0.0, samples, samples, 16, 64);
        AubryDecomposition dec = aubry_decomposition(table, 1e-8, 2e-2);
        CHECK(dec.aubry.size() == samples.size());
        CHECK(dec.classes.size() == 1);
    }
    SECTION("pendulum: single class at the potential maximum") {
        Grid grid{1, 256, 16, 2.5};
        CostModel model(pendulum(), grid);
        WeakKamResult wk = solve_weak_kam(model);
        auto samples = spread_samples(grid, 32);
        BarrierTable table = compute_barrier(model, wk.alpha, samples, samples, 4, 16);
        AubryDecomposition dec = aubry_decomposition(table, 1e-5, 5e-5);
        CHECK(dec.classes.size() == 1);
        for (int i : dec.aubry)
            CHECK(circle_dist(grid.cell_center(table.sources[i].cell)[0], 0.0) <
                  1.5 * grid.dq());
    }
    SECTION("double well: two classes at the Maupertuis distance") {
        double amp = 0.05;
        Grid grid{1, 256, 8, 0.8};
        CostModel model(double_well(amp), grid);
        WeakKamResult wk = solve_weak_kam(model);
        auto samples = spread_samples(grid, 32);
        BarrierTable table = compute_barrier(model, wk.alpha, samples, samples, 8, 32);
        AubryDecomposition dec = aubry_decomposition(table, 1e-5, 5e-5);
        REQUIRE(dec.classes.size() == 2);
        double oracle = double_well_quotient_oracle(amp);
        CHECK(dec.quotient[0][1] == Catch::Approx(oracle).epsilon(0.10));
        CHECK(dec.quotient[0][1] == dec.quotient[1][0]);
    }
    SECTION("missing Aubry points raise EmptyAubry") {
        Grid grid{1, 256, 16, 2.5};
        CostModel model(pendulum(), grid);
        WeakKamResult wk = solve_weak_kam(model);
        // samples that avoid the q=0 fiber entirely
        std::vector<SamplePoint> off;
        for (int i = 0; i < 8; ++i) off.push_back({0, 32 + i * 16});
        BarrierTable table = compute_barrier(model, wk.alpha, off, off, 4, 16);
        CHECK_THROWS_AS(aubry_decomposition(table, 1e-8, 5e-8), EmptyAubry);
    }
}

TEST_CASE("pseudo-metric axioms on computed tables", "[barrier]") {
    struct Case {
        LagrangianSpec spec;
        Grid grid;
        double tol_aubry;
        int T_min, T_max;
    };
    std::vector<Case> cases = {
        {free_particle(), {1, 256, 4, 1.0}, 1e-8, 16, 64},
        {pendulum(), {1, 256, 16, 2.5}, 1e-5, 4, 16},
        {double_well(0.05), {1, 256, 8, 0.8}, 1e-5, 8, 32},
    };
    for (auto& cs : cases) {
        CostModel model(cs.spec, cs.grid);
        WeakKamResult wk = solve_weak_kam(model);
        auto samples = spread_samples(cs.grid, 16);
        BarrierTable table =
            compute_barrier(model, wk.alpha, samples, samples, cs.T_min, cs.T_max);
        AubryDecomposition dec = aubry_decomposition(table, cs.tol_aubry, 2e-2);
        const auto& d = dec.d;
        for (std::size_t a = 0; a < d.size(); ++a) {
            CHECK(d[a][a] <= 2.0 * cs.tol_aubry);
            for (std::size_t b = 0; b < d.size(); ++b) {
                CHECK(d[a][b] == d[b][a]); // exact: same two summands
                CHECK(d[a][b] >= -1e-9);
                for (std::size_t c = 0; c < d.size(); ++c)
                    CHECK(d[a][c] <= d[a][b] + d[b][c] + 3e-3);
            }
        }
        // the barrier itself obeys the triangle inequality within the budget
        for (std::size_t a = 0; a < samples.size(); ++a)
            for (std::size_t b = 0; b < samples.size(); ++b)
                for (std::size_t c = 0; c < samples.size(); ++c)
                    CHECK(table.h[a][c] <= table.h[a][b] + table.h[b][c] + 3e-3);
    }
}

TEST_CASE("calibrated sets of the zoo", "[barrier]") {
    SECTION("free particle: the whole zero section survives") {
        Grid grid{1, 64, 8, 1.0};
        CostModel model(free_particle(), grid);
        WeakKamResult wk = solve_weak_kam(model);
        CalibratedSets sets = calibrated_sets(wk, model, 3);
        CHECK(sets.i_set.size() == std::size_t(grid.n_t) * grid.n_cells());
        for (const auto& s : sets.i_set) CHECK(s.v[0] == 0.0);
    }
    SECTION("pendulum: survivors pin the fixed point, tails shrink with n_cal") {
        Grid grid{1, 512, 8, 1.0};
        CostModel model(pendulum(0.1), grid);
        WeakKamResult wk = solve_weak_kam(model);
        CalibratedSets narrow = calibrated_sets(wk, model, 4);
        CalibratedSets wide = calibrated_sets(wk, model, 2);
        CHECK(narrow.i_set.size() <= wide.i_set.size());
        // survivors cluster near q=0
        double worst = 0.0;
        for (const auto& s : narrow.i_set)
            worst = std::max(worst, circle_dist(grid.cell_center(s.cell)[0], 0.0));
        CHECK(worst < 0.05);
        // the fixed point itself always survives
        bool has_origin = false;
        for (const auto& s : narrow.i_set)
            has_origin = has_origin || (s.t_idx == 0 && s.cell == 0);
        CHECK(has_origin);
        // the Aubry fiber is covered by the projected calibrated set
        for (int t = 0; t < grid.n_t; ++t) {
            bool found = false;
            for (const auto& s : narrow.i_set)
                found = found || (s.t_idx == t && s.cell == 0);
            CHECK(found);
        }
    }
    SECTION("double well: the heteroclinic branches of a class solution survive") {
        Grid grid{1, 256, 8, 0.8};
        CostModel model(double_well(0.05), grid);
        WeakKamResult wk = solve_weak_kam(model);
        std::vector<SamplePoint> src = {{0, 0}};
        BarrierTable table = compute_barrier(model, wk.alpha, src, src, 8, 32, true);
        WeakKamResult u1 = make_solution(weak_kam_from_barrier(table, 0), wk.alpha, model);
        CalibratedSets sets = calibrated_sets(u1, model, 2);
        int lo = 0, hi = 0;
        for (const auto& s : sets.i_set)
            if (s.t_idx == 0) {
                double q = grid.cell_center(s.cell)[0];
                if (q > 0.05 && q < 0.45) ++lo;
                if (q > 0.55 && q < 0.95) ++hi;
            }
        CHECK(lo > 20);
        CHECK(hi > 20);
    }
}

TEST_CASE("mane set of the free particle is the zero section", "[barrier]") {
    Grid grid{1, 128, 4, 1.0};
    CostModel model(free_particle(), grid);
    WeakKamResult wk = solve_weak_kam(model);
    CalibratedSets probe = calibrated_sets(wk, model, 3);
    std::vector<SamplePoint> aubry;
    for (int t = 0; t < grid.n_t; ++t)
        for (int c = 0; c < grid.n_cells(); c += 8) aubry.push_back(probe.lifted(t, c));
    CalibratedSets mane = mane_set(model, {wk}, 3, 1e-4, aubry);
    double v_quantum = grid.dq() / grid.dt();
    CHECK(mane.mane.size() >= std::size_t(grid.n_t) * grid.n_cells());
    for (const auto& s : mane.mane) CHECK(std::abs(s.v[0]) <= v_quantum + 1e-12);
}

TEST_CASE("two-dimensional barrier localizes the Aubry cell", "[barrier]") {
    LagrangianSpec spec;
    spec.dim = 2;
    spec.potential.dim = 2;
    spec.potential.terms.push_back({0.3, 0, {1, 0}, 0.0});
    spec.potential.terms.push_back({0.2, 0, {0, 1}, 0.0});
    Grid grid{2, 16, 4, 1.0};
    CostModel model(spec, grid);
    WeakKamResult wk = solve_weak_kam(model);
    auto samples = spread_samples(grid, 16);
    BarrierTable table = compute_barrier(model, wk.alpha, samples, samples, 4, 16);
    AubryDecomposition dec = aubry_decomposition(table, 1e-6, 5e-6);
    REQUIRE(dec.aubry.size() == 1);
    CHECK(table.sources[dec.aubry[0]].cell == 0); // the (0,0) maximum
}

TEST_CASE("mane set of the double well connects both classes", "[barrier]") {
    Grid grid{1, 256, 8, 0.8};
    CostModel model(double_well(0.05), grid);
    WeakKamResult wk = solve_weak_kam(model);

    std::vector<SamplePoint> reps = {{0, 0}, {0, 128}};
    BarrierTable table = compute_barrier(model, wk.alpha, reps, reps, 8, 32, true);
    std::vector<WeakKamResult> family = {
        wk,
        make_solution(weak_kam_from_barrier(table, 0), wk.alpha, model),
        make_solution(weak_kam_from_barrier(table, 1), wk.alpha, model),
    };
    CalibratedSets probe = calibrated_sets(wk, model, 6);
    std::vector<SamplePoint> aubry;
    for (int t = 0; t < grid.n_t; ++t) {
        aubry.push_back(probe.lifted(t, 0));
        aubry.push_back(probe.lifted(t, 128));
    }
    CalibratedSets mane = mane_set(model, family, 6, 1e-4, aubry);
    CHECK(mane.mane.size() > 500);
    CHECK(mane.mane_tail_forward < 0.05);
    CHECK(mane.mane_tail_backward < 0.05);
    // both Aubry fibers project out of the solver solution's calibrated set
    for (int t = 0; t < grid.n_t; ++t)
        for (int cell : {0, 128}) {
            bool found = false;
            for (const auto& s : mane.members[0].i_set)
                found = found || (s.t_idx == t && s.cell == cell);
            CHECK(found);
        }
    // heteroclinic samples run in both directions
    int rightward = 0, leftward = 0;
    for (const auto& s : mane.mane) {
        double q = grid.cell_center(s.cell)[0];
        if (q > 0.1 && q < 0.4) {
            if (s.v[0] > 0.1) ++rightward;
            if (s.v[0] < -0.1) ++leftward;
        }
    }
    CHECK(rightward > 10);
    CHECK(leftward > 10);
}
