#pragma once
// Test-only oracles, independent of the library code paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "heislab/group.hpp"

namespace heislab::oracle {

// RK4 integration of the horizontal control ODE
//   gamma' = cos(a) X1(gamma) + sin(a) X2(gamma),  a(u) = k u + phi
// This is independent of the closed-form helix used by the library.
inline GroupElement rk4_geodesic(double k, double phi, double s, int steps = 4000) {
    struct P { double x1, x2, x3; };
    auto deriv = [&](double u, const P& p) {
        const double a = k * u + phi;
        const double c = std::cos(a), sn = std::sin(a);
        return P{c, sn, -0.5 * p.x2 * c + 0.5 * p.x1 * sn};
    };
    P p{0.0, 0.0, 0.0};
    const double h = s / steps;
    double u = 0.0;
    for (int i = 0; i < steps; ++i) {
        const P k1 = deriv(u, p);
        const P k2 = deriv(u + 0.5 * h, {p.x1 + 0.5 * h * k1.x1, p.x2 + 0.5 * h * k1.x2, p.x3 + 0.5 * h * k1.x3});
        const P k3 = deriv(u + 0.5 * h, {p.x1 + 0.5 * h * k2.x1, p.x2 + 0.5 * h * k2.x2, p.x3 + 0.5 * h * k2.x3});
        const P k4 = deriv(u + h, {p.x1 + h * k3.x1, p.x2 + h * k3.x2, p.x3 + h * k3.x3});
        p.x1 += h / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1);
        p.x2 += h / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2);
        p.x3 += h / 6.0 * (k1.x3 + 2.0 * k2.x3 + 2.0 * k3.x3 + k4.x3);
        u += h;
    }
    return {p.x1, p.x2, p.x3};
}

// Shooting oracle for the on-axis distance: full-turn helices (k s = 2 pi)
// return to the axis; bisect over k until the RK4 endpoint height matches t.
// The candidate distance is the arc length s = 2 pi / k.
inline double axis_distance_shooting(double t) {
    auto height = [&](double k) { return rk4_geodesic(k, 0.0, 2.0 * 3.14159265358979323846 / k).x3; };
    double lo = 0.05, hi = 50.0;  // height decreases in k
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (height(mid) > t ? lo : hi) = mid;
    }
    const double k = 0.5 * (lo + hi);
    return 2.0 * 3.14159265358979323846 / k;
}

// Analytic left-invariant derivatives for smooth closures, as an independent
// route: X1 f = d1 f - (x2/2) d3 f, X2 f = d2 f + (x1/2) d3 f, with the
// Euclidean partials taken by central differences in the coordinates.
inline double euclid_partial(const std::function<double(GroupElement)>& f,
                             const GroupElement& a, int dir, double h = 1e-6) {
    GroupElement p = a, m = a;
    switch (dir) {
        case 1: p.x1 += h; m.x1 -= h; break;
        case 2: p.x2 += h; m.x2 -= h; break;
        case 3: p.x3 += h; m.x3 -= h; break;
    }
    return (f(p) - f(m)) / (2.0 * h);
}

inline double x1_field_analytic(const std::function<double(GroupElement)>& f,
                                const GroupElement& a) {
    return euclid_partial(f, a, 1) - 0.5 * a.x2 * euclid_partial(f, a, 3);
}

inline double x2_field_analytic(const std::function<double(GroupElement)>& f,
                                const GroupElement& a) {
    return euclid_partial(f, a, 2) + 0.5 * a.x1 * euclid_partial(f, a, 3);
}

} // namespace heislab::oracle
