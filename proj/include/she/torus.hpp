#pragma once

#include <cmath>

namespace she {

// The spatial domain is the torus [-1, 1] with endpoints identified.
inline constexpr double kTorusLength = 2.0;

// Canonical representative in [-1, 1).
inline double wrap(double a) {
    double r = std::fmod(a + 1.0, kTorusLength);
    if (r < 0.0) r += kTorusLength;
    return r - 1.0;
}

// Geodesic distance on the torus.
inline double torus_dist(double x, double y) {
    double d = std::fabs(wrap(x - y));
    return d > 1.0 ? kTorusLength - d : d;
}

}  // namespace she
