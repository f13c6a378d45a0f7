#include <catch2/catch_amalgamated.hpp>

#include "matherkit/lagrangian.hpp"

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

} // namespace

TEST_CASE("lagrangian evaluation matches hand values", "[lagrangian]") {
    // kinetic term zero at rest, so L = -V
    CHECK(eval_lagrangian(pendulum(), 0.0, {0.0, 0.0}, {0.0, 0.0}) ==
          Catch::Approx(-1.0).margin(1e-15));
    // pure kinetic
    CHECK(eval_lagrangian(free_particle(), 0.0, {0.3, 0.0}, {2.0, 0.0}) ==
          Catch::Approx(2.0).margin(1e-15));
    // 0.5 - cos(pi/2) + 0.5
    LagrangianSpec tilted = pendulum();
    tilted.one_form = {0.5, 0.0};
    CHECK(eval_lagrangian(tilted, 0.0, {0.25, 0.0}, {1.0, 0.0}) ==
          Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("potential families are exactly periodic", "[lagrangian]") {
    Potential p;
    p.dim = 1;
    p.terms.push_back({0.7, 2, {3, 0}, 0.11});
    // dyadic points keep t+1 and q+1 exactly representable, so the shifted
    // evaluations must agree bitwise
    for (double t : {0.0, 0.375, 0.9921875}) {
        for (double q : {0.0, 0.21875, 0.84375}) {
            CHECK(p.value(t, {q, 0.0}) == p.value(t + 1.0, {q, 0.0}));
            CHECK(p.value(t, {q, 0.0}) == p.value(t, {q + 1.0, 0.0}));
        }
    }
}

TEST_CASE("free particle flows in a straight line", "[lagrangian]") {
    PhasePoint x;
    x.q = {0.1, 0.0};
    x.v = {0.5, 0.0};
    PhasePoint y = el_flow(free_particle(), x, 1.0, 1e-3);
    CHECK(y.q[0] == Catch::Approx(0.6).margin(1e-12));
    CHECK(y.v[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(circle_dist(y.t, 0.0) < 1e-12); // one full period wraps
}

TEST_CASE("pendulum fixed point stays put", "[lagrangian]") {
    PhasePoint x; // q = 0 is a critical point of V
    PhasePoint y = el_flow(pendulum(), x, 2.5, 1e-3);
    CHECK(circle_dist(y.q[0], 0.0) < 1e-12);
    CHECK(std::abs(y.v[0]) < 1e-12);
}

TEST_CASE("integrator converges against a finer-step reference", "[lagrangian]") {
    PhasePoint x;
    x.q = {0.5, 0.0};
    x.v = {0.1, 0.0};
    PhasePoint coarse = el_flow(pendulum(), x, 2.0, 1e-3);
    PhasePoint fine = el_flow(pendulum(), x, 2.0, 1e-5);
    CHECK(circle_dist(coarse.q[0], fine.q[0]) < 1e-4);
    CHECK(std::abs(coarse.v[0] - fine.v[0]) < 1e-4);
}

TEST_CASE("positions stay reduced mod 1", "[lagrangian]") {
    PhasePoint x;
    x.q = {0.9, 0.0};
    x.v = {3.7, 0.0};
    PhasePoint y = el_flow(free_particle(), x, 5.0, 1e-3);
    CHECK(y.q[0] >= 0.0);
    CHECK(y.q[0] < 1.0);
    PhasePoint z = el_flow(free_particle(), x, -2.0, 1e-3);
    CHECK(z.q[0] >= 0.0);
    CHECK(z.q[0] < 1.0);
    CHECK(z.v[0] == Catch::Approx(3.7));
}

TEST_CASE("energy drift stays below tolerance on the pendulum", "[lagrangian]") {
    PhasePoint x;
    x.q = {0.3, 0.0};
    x.v = {0.4, 0.0};
    LagrangianSpec spec = pendulum();
    double e0 = energy(spec, x);
    double drift = 0.0;
    for (int s = 1; s <= 10; ++s) {
        PhasePoint y = el_flow(spec, x, 0.1 * s, 1e-4);
        drift = std::max(drift, std::abs(energy(spec, y) - e0));
    }
    CHECK(drift < 1e-6);
}

TEST_CASE("step above the stability threshold is rejected", "[lagrangian]") {
    PhasePoint x;
    CHECK_THROWS_AS(el_flow(pendulum(), x, 1.0, 0.2), StepTooLarge);
    CHECK_NOTHROW(el_flow(free_particle(), x, 1.0, 0.2)); // flat potential: no bound
}

TEST_CASE("one-form leaves trajectories unchanged", "[lagrangian]") {
    LagrangianSpec spec = pendulum();
    spec.one_form = {0.7, 0.0};
    PhasePoint x;
    x.q = {0.3, 0.0};
    x.v = {0.2, 0.0};
    CHECK(flow_invariance_under_one_form(spec, x, 1.0));

    LagrangianSpec fast = free_particle();
    fast.one_form = {2.0, 0.0};
    PhasePoint y;
    y.v = {1.0, 0.0};
    CHECK(flow_invariance_under_one_form(fast, y, 3.0));

    LagrangianSpec neg = pendulum();
    neg.one_form = {-1.3, 0.0};
    PhasePoint z;
    z.q = {0.9, 0.0};
    z.v = {-0.4, 0.0};
    CHECK(flow_invariance_under_one_form(neg, z, 2.0));
}

TEST_CASE("kinetic matrix eigenvalue bound holds for 2d specs", "[lagrangian]") {
    LagrangianSpec spec;
    spec.dim = 2;
    spec.kinetic = {2.0, 0.5, 0.5, 1.0};
    spec.potential = zero_potential(2);
    CHECK(spec.kinetic_symmetric());
    CHECK(spec.lambda_min() > 0.0);
    CHECK(spec.lambda_min() < spec.lambda_max());
    // A * A^{-1} w = w
    Vec w = {0.3, -1.1};
    Vec back = spec.kinetic_apply(spec.kinetic_solve(w));
    CHECK(back[0] == Catch::Approx(w[0]).margin(1e-14));
    CHECK(back[1] == Catch::Approx(w[1]).margin(1e-14));
}

TEST_CASE("uniform family validation", "[lagrangian]") {
    UniformFamilyParams params;
    params.l0_a = 0.5;
    params.l0_b = 2.0;
    params.l1_a = 0.5;
    params.l1_b = 1.0;
    params.K_scale = 2.0;
    params.K_offset = 1600.0;

    SECTION("bounded pendulum amplitudes pass") {
        std::vector<LagrangianSpec> family;
        for (int k = 1; k <= 4; ++k) family.push_back(pendulum(1.0 / k));
        auto rep = validate_uniform_family(family, params, 1500);
        CHECK(rep.all_ok());
    }
    SECTION("free particle passes with zero envelope margin") {
        UniformFamilyParams tight = params;
        tight.l0_a = 0.5;
        tight.l0_b = 0.0;
        tight.l1_a = 0.5;
        tight.l1_b = 0.0;
        auto rep = validate_uniform_family({free_particle()}, tight, 500);
        CHECK(rep.envelope_ok);
        CHECK(rep.envelope_witness.margin >= 0.0);
        CHECK(rep.envelope_witness.margin < 1e-12);
    }
    SECTION("unbounded amplitudes fail the envelope condition with a witness") {
        std::vector<LagrangianSpec> family;
        for (int k = 1; k <= 5; ++k) family.push_back(pendulum(double(k * k)));
        auto rep = validate_uniform_family(family, params, 1500);
        CHECK_FALSE(rep.envelope_ok);
        CHECK(rep.envelope_witness.margin < 0.0);
        CHECK(rep.envelope_witness.spec_index >= 1);
    }
}
