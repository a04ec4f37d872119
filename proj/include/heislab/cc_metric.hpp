#pragma once
// Carnot-Caratheodory distance on the Heisenberg group.
//
// Unit-speed horizontal curves steered by a rotating control a(u)=e^{i(ku+phi)}
// are helices
//   z(s)  = e^{i phi} (e^{iks} - 1) / (ik),      z = x1 + i x2
//   x3(s) = (ks - sin ks) / (2 k^2)
// and every minimizer from the identity is of this form with |ks| <= 2 pi.
// Writing theta = ks/2 in (0, pi), the endpoint satisfies
//   x3 / |z|^2 = (2 theta - sin 2 theta) / (8 sin^2 theta)   =: psi(theta)
//   d = s = |z| theta / sin theta
// psi is strictly increasing from 0 to +inf on (0, pi), so the solver is a
// bracketed bisection-then-Newton root-find in theta (or in u = pi - theta for
// near-axis points, where that variable is the numerically stable one).
// Limits: x3 = 0 gives the planar distance |z|; z = 0 gives the axis formula
// d(0,0,t) = 2 sqrt(pi |t|) from the full-turn helix ks = 2 pi.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "heislab/group.hpp"
#include "heislab/quadrature.hpp"
#include "heislab/util.hpp"

namespace heislab {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

struct GeodesicParams {
    double k = 0.0;    // curvature of the control; |k*s| <= 2 pi on minimizers
    double phi = 0.0;  // initial control direction
};

// Endpoint at time s of the unit-speed geodesic from the identity.
inline GroupElement geodesic_point(const GeodesicParams& g, double s) {
    const double u = g.k * s;
    double A, B, C;  // z = s e^{i phi} (A + iB),  x3 = s^2 C
    if (std::abs(u) < 1e-4) {
        const double u2 = u * u;
        A = 1.0 - u2 / 6.0 + u2 * u2 / 120.0;
        B = u / 2.0 - u * u2 / 24.0 + u * u2 * u2 / 720.0;
        C = 0.5 * (u / 6.0 - u * u2 / 120.0 + u * u2 * u2 / 5040.0);
    } else {
        A = std::sin(u) / u;
        B = (1.0 - std::cos(u)) / u;
        C = (u - std::sin(u)) / (2.0 * u * u);
    }
    const double c = std::cos(g.phi), sn = std::sin(g.phi);
    return {s * (A * c - B * sn), s * (A * sn + B * c), s * s * C};
}

namespace detail {

// psi(theta) = (2 theta - sin 2 theta) / (8 sin^2 theta), series near 0
inline double psi_shape(double theta) {
    if (theta < 1e-2) {
        const double t2 = theta * theta;
        // (2t - sin 2t) = (2t)^3/6 - (2t)^5/120 + (2t)^7/5040 - ...
        const double num = (8.0 * theta * t2 / 6.0) *
                           (1.0 - t2 / 5.0 + 2.0 * t2 * t2 / 105.0);
        const double s = std::sin(theta);
        return num / (8.0 * s * s);
    }
    const double s = std::sin(theta);
    return (2.0 * theta - std::sin(2.0 * theta)) / (8.0 * s * s);
}

inline double psi_shape_deriv(double theta) {
    // psi'(theta) = 1/2 - (2 theta - sin 2 theta) cos theta / (4 sin^3 theta)
    if (theta < 1e-2) {
        // series: psi = theta/6 + theta^3/... ; psi' ~ 1/6 + theta^2 * 7/90
        const double t2 = theta * theta;
        return 1.0 / 6.0 + t2 * (7.0 / 90.0);
    }
    const double s = std::sin(theta);
    return 0.5 - (2.0 * theta - std::sin(2.0 * theta)) * std::cos(theta) /
                     (4.0 * s * s * s);
}

// Solve psi(theta) = target for theta in (0, pi/2]; target <= pi/8.
inline double solve_theta_low(double target) {
    double lo = 0.0, hi = kPi / 2.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (psi_shape(mid) < target ? lo : hi) = mid;
    }
    double th = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {
        const double step = (psi_shape(th) - target) / psi_shape_deriv(th);
        const double next = th - step;
        if (next > lo && next < hi) th = next; else break;
    }
    return th;
}

// For target > pi/8 solve in u = pi - theta, where
//   psi = (2 pi - 2u + sin 2u) / (8 sin^2 u)
// decreases monotonically in u on (0, pi/2); no cancellation for small u.
inline double solve_u_high(double target) {
    auto val = [](double u) {
        const double s = std::sin(u);
        return (2.0 * kPi - 2.0 * u + std::sin(2.0 * u)) / (8.0 * s * s);
    };
    // initial bracket: psi ~ pi/(4 u^2) for small u
    double lo = 0.0, hi = kPi / 2.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (val(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// CC distance from the identity.
inline double cc_distance(const GroupElement& a) {
    const double r = std::hypot(a.x1, a.x2);
    const double t = std::abs(a.x3);
    if (t == 0.0) return r;
    if (r == 0.0) return 2.0 * std::sqrt(kPi * t);
    if (r * r < 1e-12 * t) {
        // asymptotic near the axis: d = 2 sqrt(pi t) - r + O(r^2/sqrt(t))
        return 2.0 * std::sqrt(kPi * t) - r;
    }
    const double target = t / (r * r);
    double theta;
    if (target <= kPi / 8.0) {
        theta = detail::solve_theta_low(target);
    } else {
        theta = kPi - detail::solve_u_high(target);
    }
    const double s = std::sin(theta);
    if (!(s > 0.0) || !std::isfinite(theta)) {
        throw std::logic_error("cc_distance root-find failed at (" +
                               std::to_string(a.x1) + "," + std::to_string(a.x2) + "," +
                               std::to_string(a.x3) + ")");
    }
    const double d = r * theta / s;
    if (!std::isfinite(d)) {
        throw std::logic_error("cc_distance produced a non-finite value");
    }
    return d;
}

// left-invariant two-point distance
inline double cc_distance_pair(const GroupElement& a, const GroupElement& b) {
    return cc_distance(mul(inverse(a), b));
}

inline ScalarField distance_field() {
    return {[](const GroupElement& a) { return cc_distance(a); },
            Smoothness::smooth_off_axis};
}

struct EikonalReport {
    double max_deviation = 0.0;
    GroupElement worst_point;
    std::size_t n_points = 0;
};

// max over the cloud of | ||grad d||_2 - 1 |
inline EikonalReport check_eikonal(const std::vector<GroupElement>& cloud,
                                   double h = kDefaultStep) {
    if (cloud.empty()) throw std::invalid_argument("check_eikonal: empty cloud");
    const ScalarField d = distance_field();
    EikonalReport rep;
    rep.n_points = cloud.size();
    for (const auto& p : cloud) {
        const double dev = std::abs(sub_gradient(d, p, h).norm2() - 1.0);
        if (dev > rep.max_deviation) {
            rep.max_deviation = dev;
            rep.worst_point = p;
        }
    }
    return rep;
}

struct K0Report {
    double K0 = 0.0;            // max of d * (sub-Laplacian of d)
    GroupElement worst_point;
    std::size_t n_points = 0;
};

// The sub-Laplacian of the distance obeys Delta d <= K0 / d away from the
// axis; this estimates K0 as a cloud maximum of d * Delta d.
inline K0Report estimate_K0(const std::vector<GroupElement>& cloud,
                            double h = kSecondOrderStep) {
    if (cloud.empty()) throw std::invalid_argument("estimate_K0: empty cloud");
    const ScalarField d = distance_field();
    K0Report rep;
    rep.n_points = cloud.size();
    bool first = true;
    for (const auto& p : cloud) {
        const double val = cc_distance(p) * sub_laplacian(d, p, h);
        if (first || val > rep.K0) {
            first = false;
            rep.K0 = val;
            rep.worst_point = p;
        }
    }
    return rep;
}

struct BallVolumeEstimate {
    double volume = 0.0;
    double stderr_ = 0.0;
    std::size_t n_samples = 0;
};

// Monte Carlo Lebesgue volume of the CC ball of radius R by rejection from
// the box [-R,R]^2 x [-hR^2, hR^2].  The vertical half-height must cover
// max x3 over the ball, which is R^2/(2 pi) (half-turn helices), not the
// smaller axis-formula value; a 5% margin is added on top.
inline BallVolumeEstimate ball_volume(double R, std::size_t n, std::uint64_t seed) {
    if (!(R > 0.0)) throw std::invalid_argument("ball_volume: R must be positive");
    if (n == 0) throw std::invalid_argument("ball_volume: n must be positive");
    const double half_height = 1.05 * R * R / (2.0 * kPi);
    const double box_vol = (2.0 * R) * (2.0 * R) * (2.0 * half_height);
    Rng rng(derive_seed(seed, 0xba11));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const GroupElement p{rng.uniform(-R, R), rng.uniform(-R, R),
                             rng.uniform(-half_height, half_height)};
        if (cc_distance(p) <= R) ++hits;
    }
    const double phat = static_cast<double>(hits) / static_cast<double>(n);
    BallVolumeEstimate est;
    est.volume = box_vol * phat;
    est.stderr_ = box_vol * std::sqrt(phat * (1.0 - phat) / static_cast<double>(n));
    est.n_samples = n;
    return est;
}

// Height of the unit sphere over planar radius r: the t > 0 with
// d(r, 0, t) = 1, found by bisection (d is increasing in |t|).
inline double unit_sphere_height(double r) {
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("unit_sphere_height: need 0 <= r < 1");
    double lo = 0.0, hi = 1.05 / (2.0 * kPi);
    if (cc_distance({r, 0.0, hi}) <= 1.0) throw std::logic_error("unit_sphere_height: bracket failed");
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cc_distance({r, 0.0, mid}) <= 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Deterministic Lebesgue volume of the unit CC ball from the cross-section
// integral  V1 = 4 pi * int_0^1 r * height(r) dr  (rotation symmetry in the
// plane, reflection symmetry in x3).  The integrand has a sqrt-type endpoint
// at r = 1, so nodes default generously high.
inline double unit_ball_volume_quadrature(int n = 400) {
    const QuadRule rule = gauss_legendre(n, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        acc += rule.w[i] * rule.x[i] * unit_sphere_height(rule.x[i]);
    }
    return 4.0 * kPi * acc;
}

// One-site radial reduction constant: Leb(B_r) = V1 r^4, so the pushforward
// of Lebesgue measure under d has density sigma r^3 with sigma = 4 V1.
inline double radial_pushforward_sigma(int n = 400) {
    return 4.0 * unit_ball_volume_quadrature(n);
}

// Uniform cloud in the CC ball of radius R by rejection from the bounding
// box, optionally excluding a tube around the x3-axis (where the metric is
// not differentiable).  Rejected tube points are not drawn again, so the
// caller sees how much of the request the exclusion ate.
struct BallCloud {
    std::vector<GroupElement> points;
    std::size_t n_excluded = 0;  // axis-tube hits among accepted ball points
};

inline BallCloud random_ball_cloud(double R, std::size_t n, std::uint64_t seed,
                                   double exclude_axis_radius = 0.0) {
    if (!(R > 0.0)) throw std::invalid_argument("random_ball_cloud: R must be positive");
    const double half_height = 1.05 * R * R / (2.0 * kPi);
    Rng rng(derive_seed(seed, 0xc10daull));
    BallCloud out;
    out.points.reserve(n);
    std::size_t produced = 0;
    while (produced < n) {
        const GroupElement p{rng.uniform(-R, R), rng.uniform(-R, R),
                             rng.uniform(-half_height, half_height)};
        if (cc_distance(p) > R) continue;
        ++produced;
        if (horizontal_radius(p) < exclude_axis_radius) {
            ++out.n_excluded;
            continue;
        }
        out.points.push_back(p);
    }
    return out;
}

} // namespace heislab
