#pragma once
// Gauss-Legendre quadrature with node doubling for error control, plus the
// radial truncation rule shared by the one-site integrals.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace heislab {

struct QuadRule {
    std::vector<double> x;  // nodes on (a, b)
    std::vector<double> w;  // weights
};

// Nodes and weights for n-point Gauss-Legendre on [-1, 1], by Newton iteration
// on the Legendre polynomial from the Chebyshev initial guess.
inline QuadRule gauss_legendre_unit(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

inline QuadRule gauss_legendre(int n, double a, double b) {
    QuadRule r = gauss_legendre_unit(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        r.x[i] = mid + half * r.x[i];
        r.w[i] *= half;
    }
    return r;
}

inline double integrate_rule(const QuadRule& r, const std::function<double(double)>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(r.x[i]);
    return s;
}

struct AdaptiveResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int nodes_used = 0;
    bool converged = false;
};

// Doubles the node count until successive estimates agree to rel_tol
// (absolute floor abs_floor for integrals near zero).
inline AdaptiveResult integrate_adaptive(const std::function<double(double)>& f,
                                         double a, double b,
                                         double rel_tol = 1e-10,
                                         double abs_floor = 1e-300,
                                         int n_start = 16, int n_max = 4096) {
    AdaptiveResult res;
    double prev = integrate_rule(gauss_legendre(n_start, a, b), f);
    for (int n = 2 * n_start; n <= n_max; n *= 2) {
        const double cur = integrate_rule(gauss_legendre(n, a, b), f);
        const double err = std::abs(cur - prev);
        if (err <= rel_tol * std::max(std::abs(cur), abs_floor)) {
            res.value = cur;
            res.error_estimate = err;
            res.nodes_used = n;
            res.converged = true;
            return res;
        }
        prev = cur;
        res.nodes_used = n;
    }
    res.value = prev;
    res.error_estimate = std::abs(prev);
    res.converged = false;
    return res;
}

// Truncation radius for integrands of the form r^3 e^{-E(r)}: extends the
// interval until the log-integrand has dropped tail_log below its peak and is
// decreasing.  tail_log = 46 corresponds to a ~1e-20 relative tail bound.
inline double radial_truncation(const std::function<double(double)>& energy,
                                double tail_log = 46.0) {
    auto log_integrand = [&](double r) {
        return 3.0 * std::log(std::max(r, 1e-12)) - energy(r);
    };
    double peak = log_integrand(1e-3);
    double r_peak = 1e-3;
    for (double r = 0.05; r <= 20.0; r += 0.05) {
        const double v = log_integrand(r);
        if (v > peak) { peak = v; r_peak = r; }
    }
    double r_max = std::max(2.0 * r_peak, 4.0);
    for (int i = 0; i < 200; ++i) {
        if (log_integrand(r_max) < peak - tail_log &&
            log_integrand(r_max) < log_integrand(0.9 * r_max)) {
            return r_max;
        }
        r_max *= 1.25;
    }
    throw std::runtime_error("radial_truncation: integrand tail does not decay; "
                             "the measure looks non-normalizable");
}

} // namespace heislab
