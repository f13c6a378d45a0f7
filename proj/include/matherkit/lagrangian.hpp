#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "matherkit/errors.hpp"
#include "matherkit/potential.hpp"
#include "matherkit/torus.hpp"

namespace matherkit {

using Vec = std::array<double, 2>;

/// Point of T^1 x TT^d. Unused coordinates stay zero for d = 1.
struct PhasePoint {
    double t = 0.0;
    Vec q = {0.0, 0.0};
    Vec v = {0.0, 0.0};
};

/// Mechanical Tonelli model L(t,q,v) = v.Av/2 - V(t,q) + c.v on T^1 x TT^d.
/// The closed one-form c.dq shifts the action without altering extremals.
struct LagrangianSpec {
    int dim = 1;
    std::array<double, 4> kinetic = {1.0, 0.0, 0.0, 1.0}; // row-major d x d
    Vec one_form = {0.0, 0.0};
    Potential potential;

    double kinetic_entry(int i, int j) const { return kinetic[i * 2 + j]; }

    /// Smallest eigenvalue of the kinetic matrix.
    double lambda_min() const {
        if (dim == 1) return kinetic[0];
        double a = kinetic[0], b = kinetic[1], d = kinetic[3];
        double tr = a + d, det = a * d - b * b;
        double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        return tr / 2.0 - disc;
    }

    double lambda_max() const {
        if (dim == 1) return kinetic[0];
        double a = kinetic[0], b = kinetic[1], d = kinetic[3];
        double tr = a + d, det = a * d - b * b;
        double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
        return tr / 2.0 + disc;
    }

    bool kinetic_symmetric() const { return dim == 1 || kinetic[1] == kinetic[2]; }

    Vec kinetic_apply(const Vec& v) const {
        if (dim == 1) return {kinetic[0] * v[0], 0.0};
        return {kinetic[0] * v[0] + kinetic[1] * v[1],
                kinetic[2] * v[0] + kinetic[3] * v[1]};
    }

    Vec kinetic_solve(const Vec& w) const {
        if (dim == 1) return {w[0] / kinetic[0], 0.0};
        double det = kinetic[0] * kinetic[3] - kinetic[1] * kinetic[2];
        return {(kinetic[3] * w[0] - kinetic[1] * w[1]) / det,
                (-kinetic[2] * w[0] + kinetic[0] * w[1]) / det};
    }
};

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a, int dim) { return std::sqrt(dot(a, a, dim)); }

/// Action density L(t,q,v) = v.Av/2 - V(t,q) + c.v. Total function.
inline double eval_lagrangian(const LagrangianSpec& spec, double t, const Vec& q,
                              const Vec& v) {
    double kin = 0.5 * dot(v, spec.kinetic_apply(v), spec.dim);
    return kin - spec.potential.value(t, q) + dot(spec.one_form, v, spec.dim);
}

/// Largest stable step for the Stoermer-Verlet integrator, from the
/// potential curvature bound. Unbounded (infinity) for flat potentials.
inline double stable_step_bound(const LagrangianSpec& spec) {
    double curv = spec.potential.hessian_bound();
    if (curv <= 0.0) return std::numeric_limits<double>::infinity();
    double omega = std::sqrt(curv / spec.lambda_min());
    return 0.5 / omega;
}

/// Time-duration image of x under the Euler-Lagrange flow, integrated with a
/// fixed-step Stoermer-Verlet scheme (kick-drift-kick on the Hamiltonian
/// side). Negative durations integrate backward. Positions wrap mod 1.
inline PhasePoint el_flow(const LagrangianSpec& spec, const PhasePoint& x,
                          double duration, double dt) {
    if (!(dt > 0.0)) throw Error("el_flow requires dt > 0");
    double dt_max = stable_step_bound(spec);
    if (dt > dt_max) throw StepTooLarge(dt, dt_max);

    const int dim = spec.dim;
    double sign = duration >= 0.0 ? 1.0 : -1.0;
    double remaining = std::abs(duration);
    double t = x.t;
    Vec q = x.q, v = x.v;
    while (remaining > 0.0) {
        double h = sign * std::min(dt, remaining);
        // A qdd = -grad V; the one-form cancels: closed forms keep extremals.
        Vec g = spec.potential.grad_q(t, q);
        Vec a = spec.kinetic_solve(g);
        for (int i = 0; i < dim; ++i) v[i] -= 0.5 * h * a[i];
        for (int i = 0; i < dim; ++i) q[i] = wrap_unit(q[i] + h * v[i]);
        t += h;
        g = spec.potential.grad_q(t, q);
        a = spec.kinetic_solve(g);
        for (int i = 0; i < dim; ++i) v[i] -= 0.5 * h * a[i];
        remaining -= std::abs(h);
    }
    PhasePoint out;
    out.t = wrap_unit(t);
    out.q = q;
    out.v = v;
    return out;
}

/// Energy v.Av/2 + V(t,q); conserved along el_flow for autonomous specs.
inline double energy(const LagrangianSpec& spec, const PhasePoint& x) {
    return 0.5 * dot(x.v, spec.kinetic_apply(x.v), spec.dim) +
           spec.potential.value(x.t, x.q);
}

/// True iff the trajectory through x is unchanged (within tol) when the
/// one-form coefficient is dropped.
inline bool flow_invariance_under_one_form(const LagrangianSpec& spec,
                                           const PhasePoint& x, double duration,
                                           double dt = 1e-3, double tol = 1e-9) {
    LagrangianSpec flat = spec;
    flat.one_form = {0.0, 0.0};
    int checkpoints = 8;
    for (int s = 1; s <= checkpoints; ++s) {
        double d = duration * s / checkpoints;
        PhasePoint a = el_flow(spec, x, d, dt);
        PhasePoint b = el_flow(flat, x, d, dt);
        for (int i = 0; i < spec.dim; ++i) {
            if (circle_dist(a.q[i], b.q[i]) > tol) return false;
            if (std::abs(a.v[i] - b.v[i]) > tol) return false;
        }
    }
    return true;
}

/// Superlinear envelopes a*s^2 - b and the flow/derivative bound map
/// K(k) = sqrt(K_scale*k^2 + K_offset) of a uniform family. The torus has
/// the trivial one-chart atlas, so the chart condition reduces to a bound
/// on second derivatives of L.
struct UniformFamilyParams {
    double l0_a = 0.25, l0_b = 2.0; // lower envelope
    double l1_a = 1.0, l1_b = 0.0;  // upper envelope
    double K_scale = 2.0, K_offset = 10.0;

    double l0(double s) const { return l0_a * s * s - l0_b; }
    double l1(double s) const { return l1_a * s * s + l1_b; }
    double K(double k) const { return std::sqrt(K_scale * k * k + K_offset); }
};

struct UniformFamilyWitness {
    std::size_t spec_index = 0;
    PhasePoint point;
    double margin = 0.0; // worst slack; negative = violation
};

struct UniformFamilyReport {
    bool envelope_ok = true;      // condition (i)
    bool flow_bound_ok = true;    // condition (ii)
    bool second_deriv_ok = true;  // condition (iii)
    UniformFamilyWitness envelope_witness;
    UniformFamilyWitness flow_witness;
    UniformFamilyWitness deriv_witness;
    bool all_ok() const { return envelope_ok && flow_bound_ok && second_deriv_ok; }
};

namespace detail {
// Deterministic low-discrepancy samples in [0,1)^n.
inline double halton(std::uint64_t i, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    for (std::uint64_t n = i + 1; n > 0; n /= base) {
        f /= double(base);
        r += f * double(n % base);
    }
    return r;
}
} // namespace detail

/// Sampled check of the three uniform-family conditions. Failures are
/// reported with their worst witness, never thrown.
inline UniformFamilyReport validate_uniform_family(
    const std::vector<LagrangianSpec>& specs, const UniformFamilyParams& params,
    int sample_budget = 2000) {
    if (specs.empty()) throw Error("validate_uniform_family: empty family");
    UniformFamilyReport rep;
    rep.envelope_witness.margin = std::numeric_limits<double>::infinity();
    rep.flow_witness.margin = std::numeric_limits<double>::infinity();
    rep.deriv_witness.margin = std::numeric_limits<double>::infinity();

    const double v_cap = 4.0; // sampling box for velocities
    int per_spec = std::max(8, sample_budget / int(specs.size()));
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const auto& spec = specs[s];
        for (int i = 0; i < per_spec; ++i) {
            PhasePoint x;
            x.t = detail::halton(i, 2);
            x.q[0] = detail::halton(i, 3);
            x.q[1] = spec.dim > 1 ? detail::halton(i, 5) : 0.0;
            x.v[0] = v_cap * (2.0 * detail::halton(i, 7) - 1.0);
            x.v[1] = spec.dim > 1 ? v_cap * (2.0 * detail::halton(i, 11) - 1.0) : 0.0;

            double speed = norm(x.v, spec.dim);
            double L = eval_lagrangian(spec, x.t, x.q, x.v);
            // strip the one-form for the envelope test: |c.v| folds into l1
            double L0 = L - dot(spec.one_form, x.v, spec.dim);
            double lo = L0 - params.l0(speed);
            double hi = params.l1(speed) - L0;
            double margin = std::min(lo, hi);
            if (margin < rep.envelope_witness.margin)
                rep.envelope_witness = {s, x, margin};

            // condition (iii): Hessian blocks of L are A and the V derivatives
            double d2 = std::max(spec.lambda_max(), spec.potential.hessian_bound());
            double dmargin = params.K(speed) - d2;
            if (dmargin < rep.deriv_witness.margin) rep.deriv_witness = {s, x, dmargin};
        }

        // condition (ii): flow images of {|v| <= k} for t in [-1,1]
        double dt = std::min(1e-2, 0.5 * stable_step_bound(spec));
        for (int i = 0; i < std::max(4, per_spec / 8); ++i) {
            PhasePoint x;
            x.t = detail::halton(i, 2);
            x.q[0] = detail::halton(i, 3);
            x.q[1] = spec.dim > 1 ? detail::halton(i, 5) : 0.0;
            double k = v_cap * detail::halton(i, 7);
            x.v[0] = k;
            double bound = params.K(k);
            for (double dur : {-1.0, 1.0}) {
                PhasePoint y = el_flow(spec, x, dur, dt);
                double margin = bound - norm(y.v, spec.dim);
                if (margin < rep.flow_witness.margin) rep.flow_witness = {s, x, margin};
            }
        }
    }
    rep.envelope_ok = rep.envelope_witness.margin >= 0.0;
    rep.flow_bound_ok = rep.flow_witness.margin >= 0.0;
    rep.second_deriv_ok = rep.deriv_witness.margin >= 0.0;
    return rep;
}

} // namespace matherkit
