#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

namespace matherkit {

/// Reduce x to the fundamental domain [0,1).
inline double wrap_unit(double x) {
    double y = x - std::floor(x);
    if (y >= 1.0) y -= 1.0; // floor rounding at the upper edge
    if (y < 0.0) y += 1.0;
    return y;
}

/// Signed displacement from a to b choosing the nearest image, in (-0.5, 0.5].
inline double nearest_delta(double a, double b) {
    double d = wrap_unit(b) - wrap_unit(a);
    if (d > 0.5) d -= 1.0;
    if (d <= -0.5) d += 1.0;
    return d;
}

/// Distance on the unit circle.
inline double circle_dist(double a, double b) {
    return std::abs(nearest_delta(a, b));
}

/// Euclidean distance with optional periodic wrap per axis.
inline double wrapped_dist(const std::vector<double>& a, const std::vector<double>& b,
                           const std::vector<bool>& wrap) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = wrap[i] ? nearest_delta(a[i], b[i]) : (b[i] - a[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace matherkit
