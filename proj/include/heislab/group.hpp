#pragma once
// The Heisenberg group realized on R^3, its left-invariant horizontal frame,
// and finite-difference differential operators along one-parameter subgroups.
//
// Conventions fixed here and relied on everywhere else:
//   product   a*b = (a1+b1, a2+b2, a3+b3 + (a1*b2 - a2*b1)/2)
//   frame     X1 = d/dx1 - (x2/2) d/dx3,  X2 = d/dx2 + (x1/2) d/dx3
//   vertical  X3 = d/dx3 = [X1, X2]
//   dilation  D_l (x1,x2,x3) = (l x1, l x2, l^2 x3), homogeneous dimension 4.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace heislab {

struct GroupElement {
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;

    friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

inline GroupElement identity() { return {0.0, 0.0, 0.0}; }

inline GroupElement mul(const GroupElement& a, const GroupElement& b) {
    return {a.x1 + b.x1,
            a.x2 + b.x2,
            a.x3 + b.x3 + 0.5 * (a.x1 * b.x2 - a.x2 * b.x1)};
}

inline GroupElement inverse(const GroupElement& a) {
    return {-a.x1, -a.x2, -a.x3};
}

inline GroupElement dilate(const GroupElement& a, double lambda) {
    return {lambda * a.x1, lambda * a.x2, lambda * lambda * a.x3};
}

// homogeneous gauge ((x1^2+x2^2)^2 + x3^2)^(1/4); used only to scale
// finite-difference steps, not as a metric
inline double gauge(const GroupElement& a) {
    const double r2 = a.x1 * a.x1 + a.x2 * a.x2;
    return std::pow(r2 * r2 + a.x3 * a.x3, 0.25);
}

inline double horizontal_radius(const GroupElement& a) {
    return std::hypot(a.x1, a.x2);
}

// Value of the horizontal part of a gradient at one point.
struct HorizontalVector {
    double v1 = 0.0, v2 = 0.0;

    double norm2() const { return std::hypot(v1, v2); }

    // q-norm accessor; q=2 is the Euclidean norm used by the Dirichlet forms
    double norm_q(double q) const {
        if (q == 2.0) return norm2();
        return std::pow(std::pow(std::abs(v1), q) + std::pow(std::abs(v2), q), 1.0 / q);
    }
};

enum class Smoothness { smooth, smooth_off_axis };

// A scalar field together with a smoothness hint.  Fields flagged
// smooth_off_axis (the metric itself) refuse differentiation too close to the
// x3-axis, where the field is only Lipschitz.
struct ScalarField {
    std::function<double(const GroupElement&)> eval;
    Smoothness hint = Smoothness::smooth;

    double operator()(const GroupElement& a) const { return eval(a); }
};

inline constexpr double kDefaultStep = 1e-5;
// Second differences divide by h^2, so cancellation noise scales as eps/h^2;
// a larger default step balances that against the O(h^2) truncation error.
inline constexpr double kSecondOrderStep = 1e-4;
inline constexpr double kAxisGuard = 1e-6;

namespace detail {

inline void check_axis_guard(const ScalarField& f, const GroupElement& a) {
    if (f.hint == Smoothness::smooth_off_axis && horizontal_radius(a) < kAxisGuard) {
        throw std::domain_error("derivative request on the x3-axis for a field "
                                "that is not smooth there (x1,x2 ~ " +
                                std::to_string(a.x1) + "," + std::to_string(a.x2) + ")");
    }
}

// step scaling keeps relative truncation error comparable across the cloud
inline double scaled_step(const GroupElement& a, double h) {
    return h * std::max(1.0, gauge(a));
}

// one-parameter subgroup directions: exp(s X1) = (s,0,0), exp(s X2) = (0,s,0),
// exp(s X3) = (0,0,s).  Right-translation a*exp(s X_i) realizes the flow of
// the left-invariant field X_i.
inline GroupElement subgroup_point(int dir, double s) {
    switch (dir) {
        case 1: return {s, 0.0, 0.0};
        case 2: return {0.0, s, 0.0};
        case 3: return {0.0, 0.0, s};
        default: throw std::invalid_argument("subgroup direction must be 1, 2 or 3");
    }
}

} // namespace detail

// Central difference along the X_dir flow, O(h^2).
inline double horizontal_derivative(const ScalarField& f, const GroupElement& a,
                                    int dir, double h = kDefaultStep) {
    detail::check_axis_guard(f, a);
    const double hs = detail::scaled_step(a, h);
    const double fp = f(mul(a, detail::subgroup_point(dir, hs)));
    const double fm = f(mul(a, detail::subgroup_point(dir, -hs)));
    return (fp - fm) / (2.0 * hs);
}

inline HorizontalVector sub_gradient(const ScalarField& f, const GroupElement& a,
                                     double h = kDefaultStep) {
    return {horizontal_derivative(f, a, 1, h), horizontal_derivative(f, a, 2, h)};
}

// Second difference along one flow, shared by the sub-Laplacian.
inline double second_derivative_along(const ScalarField& f, const GroupElement& a,
                                      int dir, double h = kSecondOrderStep) {
    detail::check_axis_guard(f, a);
    const double hs = detail::scaled_step(a, h);
    const double fp = f(mul(a, detail::subgroup_point(dir, hs)));
    const double f0 = f(a);
    const double fm = f(mul(a, detail::subgroup_point(dir, -hs)));
    return (fp - 2.0 * f0 + fm) / (hs * hs);
}

inline double sub_laplacian(const ScalarField& f, const GroupElement& a,
                            double h = kSecondOrderStep) {
    return second_derivative_along(f, a, 1, h) + second_derivative_along(f, a, 2, h);
}

// carre du champ
inline double gamma(const ScalarField& f, const GroupElement& a,
                    double h = kDefaultStep) {
    const HorizontalVector g = sub_gradient(f, a, h);
    return g.v1 * g.v1 + g.v2 * g.v2;
}

namespace detail {

// Nested differencing for mixed second derivatives: the outer and inner steps
// are sqrt(h)-scaled so the overall truncation error is O(h).
struct NestedDeriv {
    const ScalarField& f;
    double hstep;

    double d(int dir, const GroupElement& a) const {
        const double hs = scaled_step(a, hstep);
        const double fp = f(mul(a, subgroup_point(dir, hs)));
        const double fm = f(mul(a, subgroup_point(dir, -hs)));
        return (fp - fm) / (2.0 * hs);
    }

    double dd(int outer, int inner, const GroupElement& a) const {
        const double hs = scaled_step(a, hstep);
        const GroupElement ap = mul(a, subgroup_point(outer, hs));
        const GroupElement am = mul(a, subgroup_point(outer, -hs));
        return (d(inner, ap) - d(inner, am)) / (2.0 * hs);
    }
};

} // namespace detail

// Second-order form from the iterated carre du champ on this group, written
// out in the horizontal frame with Z the commutator field:
//   Gamma2(f) = (X1^2 f)^2 + (X2^2 f)^2 + ((X1X2+X2X1)f)^2/2 + (Zf)^2/2
//               + 2 ((X1 Z f)(X2 f) - (X2 Z f)(X1 f))
inline double gamma2(const ScalarField& f, const GroupElement& a,
                     double h = kDefaultStep) {
    detail::check_axis_guard(f, a);
    const double h2 = std::sqrt(h);
    const detail::NestedDeriv nd{f, h2};

    const double x1f = nd.d(1, a);
    const double x2f = nd.d(2, a);
    const double zf = nd.d(3, a);
    const double x11 = nd.dd(1, 1, a);
    const double x22 = nd.dd(2, 2, a);
    const double x12 = nd.dd(1, 2, a);
    const double x21 = nd.dd(2, 1, a);
    const double x1z = nd.dd(1, 3, a);
    const double x2z = nd.dd(2, 3, a);

    const double sym = x12 + x21;
    return x11 * x11 + x22 * x22 + 0.5 * sym * sym + 0.5 * zf * zf +
           2.0 * (x1z * x2f - x2z * x1f);
}

struct CdWitness {
    double min_value = 0.0;   // min of Gamma2 - rho*Gamma over the scan
    GroupElement point;
    std::size_t field_index = 0;
    bool negative = false;
};

// Scans trial fields over sample points for a violation of the curvature
// condition Gamma2 >= rho * Gamma.  On this group no rho makes the condition
// hold, and the shipped trial families in the tests exhibit that.
inline CdWitness cd_condition_probe(const std::vector<ScalarField>& trials,
                                    const std::vector<GroupElement>& points,
                                    double rho, double h = kDefaultStep) {
    if (trials.empty() || points.empty()) {
        throw std::invalid_argument("cd_condition_probe needs a nonempty trial family and sample set");
    }
    CdWitness w;
    bool first = true;
    for (std::size_t fi = 0; fi < trials.size(); ++fi) {
        for (const auto& p : points) {
            const double val = gamma2(trials[fi], p, h) - rho * gamma(trials[fi], p, h);
            if (first || val < w.min_value) {
                first = false;
                w.min_value = val;
                w.point = p;
                w.field_index = fi;
            }
        }
    }
    w.negative = w.min_value < 0.0;
    return w;
}

// Shipped trial family for the curvature probe.  The x3-coupled quadratic
// members x1 + M x2 x3 have Gamma = 1 and Gamma2 = -2M at the identity, so
// they defeat every rho once M is large enough; x1 alone is benign.
inline std::vector<ScalarField> default_cd_trials() {
    std::vector<ScalarField> t;
    t.push_back({[](const GroupElement& a) { return a.x1; }});
    t.push_back({[](const GroupElement& a) { return a.x3; }});
    t.push_back({[](const GroupElement& a) { return a.x3 + 3.0 * a.x1; }});
    t.push_back({[](const GroupElement& a) { return a.x1 * a.x2; }});
    for (double M : {1.0, 1e3, 1e7}) {
        t.push_back({[M](const GroupElement& a) { return a.x1 + M * a.x2 * a.x3; }});
    }
    return t;
}

inline std::vector<GroupElement> default_cd_points() {
    std::vector<GroupElement> pts;
    pts.push_back(identity());
    for (double y : {1.0, 2.0}) pts.push_back({0.0, y, 0.0});
    for (double a : {-0.5, 0.5}) {
        for (double b : {-0.5, 0.5}) {
            pts.push_back({a, b, 0.25});
        }
    }
    return pts;
}

} // namespace heislab
