#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "matherkit/torus.hpp"

namespace matherkit {

/// One Fourier mode of a scalar field on T^1 x T^d:
///   amplitude * cos(2*pi*(time_harmonic*t + wave.q + phase)).
/// Integer harmonics make the field 1-periodic in every argument exactly.
struct TrigTerm {
    double amplitude = 0.0;
    int time_harmonic = 0;
    std::array<int, 2> wave = {0, 0};
    double phase = 0.0;
};

/// Potential V(t,q) given as a trigonometric polynomial.
struct Potential {
    int dim = 1;
    std::vector<TrigTerm> terms;

    // Phases are reduced mod 1 before cos() so that evaluations at t and t+1
    // (or q and q+e_i) are bitwise identical.
    double value(double t, const std::array<double, 2>& q) const {
        double v = 0.0;
        for (const auto& term : terms) {
            double arg = term.time_harmonic * wrap_unit(t) + term.phase;
            for (int i = 0; i < dim; ++i) arg += term.wave[i] * wrap_unit(q[i]);
            v += term.amplitude * std::cos(2.0 * std::numbers::pi * wrap_unit(arg));
        }
        return v;
    }

    std::array<double, 2> grad_q(double t, const std::array<double, 2>& q) const {
        std::array<double, 2> g = {0.0, 0.0};
        const double two_pi = 2.0 * std::numbers::pi;
        for (const auto& term : terms) {
            double arg = term.time_harmonic * wrap_unit(t) + term.phase;
            for (int i = 0; i < dim; ++i) arg += term.wave[i] * wrap_unit(q[i]);
            double s = -term.amplitude * two_pi * std::sin(two_pi * wrap_unit(arg));
            for (int i = 0; i < dim; ++i) g[i] += s * term.wave[i];
        }
        return g;
    }

    /// Upper bound for |V|.
    double sup_abs() const {
        double b = 0.0;
        for (const auto& term : terms) b += std::abs(term.amplitude);
        return b;
    }

    /// Upper bound for the spectral norm of the spatial Hessian of V.
    double hessian_bound() const {
        double b = 0.0;
        const double two_pi = 2.0 * std::numbers::pi;
        for (const auto& term : terms) {
            double k2 = 0.0;
            for (int i = 0; i < dim; ++i) k2 += double(term.wave[i]) * term.wave[i];
            b += std::abs(term.amplitude) * two_pi * two_pi * k2;
        }
        return b;
    }

};

inline Potential zero_potential(int dim = 1) { return Potential{dim, {}}; }

/// V = amplitude * cos(2*pi*(q - phase)); single maximum on the circle.
inline Potential cosine_potential(double amplitude, double phase = 0.0) {
    Potential p;
    p.dim = 1;
    p.terms.push_back({amplitude, 0, {1, 0}, -phase});
    return p;
}

/// V = amplitude * cos(4*pi*q); two equal maxima at q = 0 and q = 1/2.
inline Potential double_well_potential(double amplitude) {
    Potential p;
    p.dim = 1;
    p.terms.push_back({amplitude, 0, {2, 0}, 0.0});
    return p;
}

/// Double well plus a tilt that raises the q = 0 maximum by `tilt` and
/// lowers the q = 1/2 one by the same amount. Both points stay critical.
inline Potential tilted_double_well_potential(double amplitude, double tilt) {
    Potential p = double_well_potential(amplitude);
    p.terms.push_back({tilt, 0, {1, 0}, 0.0});
    return p;
}

} // namespace matherkit
