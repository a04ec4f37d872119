#pragma once
// Quadrature-backed expectations for finite lattice windows.
//
// Every shipped Hamiltonian depends on a spin only through its distance to
// the identity, so window measures push forward to radial profiles with
// per-site density sigma r^3 (sigma cancels in normalized expectations).
// Two evaluation routes are kept deliberately separate so they can check
// each other:
//   - dense tensor sums whose Boltzmann weights come from hamiltonian()
//     evaluated on planar representative spins (r, 0, 0),
//   - per-site/per-bond sums (window_energy_radial) used by the transfer
//     contraction and by nested conditional kernels.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "heislab/cc_metric.hpp"
#include "heislab/model.hpp"
#include "heislab/quadrature.hpp"

namespace heislab {

struct QuadParams {
    double rel_tol = 1e-9;
    double tail_log = 46.0;  // integrand drop below peak, in nats, before truncation
    int n_nodes = 32;        // per-site nodes for grid-based windows
};

// distances of the two neighbors of site i (boundary spins included)
inline SiteContext site_context(const LatticeConfig& cfg, const ModelSpec& m, int i) {
    SiteContext ctx;
    if (m.has_bonds()) {
        ctx.neighbor_d.push_back(cc_distance(cfg.site(i - 1)));
        ctx.neighbor_d.push_back(cc_distance(cfg.site(i + 1)));
    }
    return ctx;
}

// E^{i, omega}[f(d(x_i))] by adaptive quadrature on the radial weight.
inline double one_site_conditional_expectation(const std::function<double(double)>& f,
                                               const LatticeConfig& cfg, const ModelSpec& m,
                                               int i, const QuadParams& qp = {}) {
    const SiteContext ctx = site_context(cfg, m, i);
    const auto energy = [&](double r) { return conditional_energy(m, r, ctx); };
    const double r_max = radial_truncation(energy, qp.tail_log);
    const auto w = radial_weight(m, ctx);
    const auto z = integrate_adaptive(w, 0.0, r_max, qp.rel_tol);
    const auto num = integrate_adaptive([&](double r) { return f(r) * w(r); }, 0.0, r_max,
                                        qp.rel_tol, 1e-14 * std::abs(z.value));
    if (!(z.value > 0.0)) throw std::runtime_error("one-site kernel has zero mass");
    return num.value / z.value;
}

// energy of a radial window profile with radial boundary values; the
// per-site plus per-bond route, complementary to hamiltonian()
inline double window_energy_radial(const ModelSpec& m, const std::vector<double>& r,
                                   double d_left, double d_right) {
    if (r.empty()) throw std::invalid_argument("window_energy_radial: empty profile");
    double e = 0.0;
    for (double ri : r) e += phase_energy(m, ri);
    if (m.has_bonds()) {
        e += bond_energy(m, r.front(), d_left);
        for (std::size_t i = 0; i + 1 < r.size(); ++i) e += bond_energy(m, r[i], r[i + 1]);
        e += bond_energy(m, r.back(), d_right);
    }
    return e;
}

namespace detail {

// conservative per-site radial cutoffs: first pass from the phase alone,
// second pass lowers the conditional energy over a neighbor-value grid so
// the cutoff covers every context the window integration can produce
inline std::vector<double> window_cutoffs(const LatticeConfig& cfg, const ModelSpec& m,
                                          double tail_log) {
    const int n = cfg.size();
    const auto phase_only = [&](double r) { return phase_energy(m, r); };
    const double r0 = radial_truncation(phase_only, tail_log);
    double dv_max = r0;
    if (m.has_bonds()) {
        dv_max = std::max(dv_max, cc_distance(cfg.site(cfg.lo - 1)));
        dv_max = std::max(dv_max, cc_distance(cfg.site(cfg.hi + 1)));
    }
    std::vector<double> cut(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (!m.has_bonds()) {
            cut[static_cast<std::size_t>(i)] = r0;
            continue;
        }
        const auto lower_env = [&](double r) {
            double b = 0.0;
            for (int side = 0; side < 2; ++side) {
                double best = bond_energy(m, r, 0.0);
                for (int k = 1; k <= 32; ++k) {
                    best = std::min(best, bond_energy(m, r, dv_max * k / 32.0));
                }
                b += best;
            }
            return phase_energy(m, r) + b;
        };
        cut[static_cast<std::size_t>(i)] = radial_truncation(lower_env, tail_log);
    }
    return cut;
}

} // namespace detail

// Discrete radial grid over a window: Gauss-Legendre nodes per site with the
// Jacobian r^3 folded into the weights.  Expectations on the grid are exact
// algebra, which makes consistency identities between evaluation routes
// sharp tests of the bond bookkeeping.
class WindowGrid {
  public:
    WindowGrid(const LatticeConfig& cfg, const ModelSpec& m, int n_nodes,
               double tail_log = 46.0)
        : cfg_(cfg), m_(m) {
        if (cfg_.size() <= 0) throw std::invalid_argument("WindowGrid: empty window");
        if (n_nodes < 2) throw std::invalid_argument("WindowGrid: need at least 2 nodes");
        if (m_.has_bonds() && (!cfg_.left_boundary || !cfg_.right_boundary)) {
            throw std::invalid_argument("WindowGrid: boundary spins required");
        }
        if (m_.has_bonds()) {
            d_left_ = cc_distance(cfg_.site(cfg_.lo - 1));
            d_right_ = cc_distance(cfg_.site(cfg_.hi + 1));
        }
        cut_ = detail::window_cutoffs(cfg_, m_, tail_log);
        for (double c : cut_) rules_.push_back(gauss_legendre(n_nodes, 0.0, c));
    }

    int sites() const { return cfg_.size(); }
    const QuadRule& site_rule(int idx) const { return rules_.at(static_cast<std::size_t>(idx)); }
    double site_cutoff(int idx) const { return cut_.at(static_cast<std::size_t>(idx)); }
    double boundary_d_left() const { return d_left_; }
    double boundary_d_right() const { return d_right_; }

    // dense tensor-product expectation of f(radial profile); weights come
    // from hamiltonian() on planar representative spins
    double expectation(const std::function<double(const std::vector<double>&)>& f) const {
        const int n = sites();
        if (n > 3) throw std::invalid_argument("WindowGrid::expectation: dense route is for <= 3 sites");
        std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
        std::vector<double> r(static_cast<std::size_t>(n));
        LatticeConfig work = cfg_;
        double z = 0.0, acc = 0.0, e_min = 0.0;
        bool have_min = false;
        // first pass for the energy offset keeps exp() in range
        std::vector<double> energies;
        for_each_assignment(idx, [&](const std::vector<std::size_t>& k) {
            for (int i = 0; i < n; ++i) {
                work.spins[static_cast<std::size_t>(i)] =
                    planar_spin(rules_[static_cast<std::size_t>(i)].x[k[static_cast<std::size_t>(i)]]);
            }
            const double e = hamiltonian(work, m_).total;
            energies.push_back(e);
            if (!have_min || e < e_min) { e_min = e; have_min = true; }
        });
        std::size_t flat = 0;
        for_each_assignment(idx, [&](const std::vector<std::size_t>& k) {
            double w = std::exp(-(energies[flat++] - e_min));
            for (int i = 0; i < n; ++i) {
                const auto& rule = rules_[static_cast<std::size_t>(i)];
                const double ri = rule.x[k[static_cast<std::size_t>(i)]];
                r[static_cast<std::size_t>(i)] = ri;
                w *= rule.w[k[static_cast<std::size_t>(i)]] * ri * ri * ri;
            }
            z += w;
            acc += w * f(r);
        });
        return acc / z;
    }

    // E[prod_i g_i(r_i)] by transfer contraction along the chain; a null
    // entry means the constant 1.  Weights come from the per-site/per-bond
    // route, so agreement with expectation() crosses code paths.
    double transfer_expectation(const std::vector<std::function<double(double)>>& g) const {
        if (static_cast<int>(g.size()) != sites()) {
            throw std::invalid_argument("transfer_expectation: need one entry per site");
        }
        return contract(g) / contract(std::vector<std::function<double(double)>>(g.size()));
    }

    double transfer_site_expectation(int idx, const std::function<double(double)>& gi) const {
        std::vector<std::function<double(double)>> g(static_cast<std::size_t>(sites()));
        g.at(static_cast<std::size_t>(idx)) = gi;
        return transfer_expectation(g);
    }

  private:
    template <class Fn>
    void for_each_assignment(std::vector<std::size_t>& idx, Fn&& fn) const {
        const int n = sites();
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            fn(idx);
            int pos = 0;
            while (pos < n) {
                if (++idx[static_cast<std::size_t>(pos)] <
                    rules_[static_cast<std::size_t>(pos)].x.size()) break;
                idx[static_cast<std::size_t>(pos)] = 0;
                ++pos;
            }
            if (pos == n) break;
        }
    }

    double contract(const std::vector<std::function<double(double)>>& g) const {
        const int n = sites();
        // per-site vectors: jacobian-weighted Boltzmann factor of the phase,
        // boundary bonds folded into the end vectors, offsets by grid minima
        auto site_vec = [&](int i) {
            const auto& rule = rules_[static_cast<std::size_t>(i)];
            std::vector<double> e(rule.x.size());
            double e_min = 0.0;
            for (std::size_t k = 0; k < rule.x.size(); ++k) {
                const double r = rule.x[k];
                double val = phase_energy(m_, r);
                if (m_.has_bonds() && i == 0) val += bond_energy(m_, r, d_left_);
                if (m_.has_bonds() && i == n - 1) val += bond_energy(m_, r, d_right_);
                e[k] = val;
                if (k == 0 || val < e_min) e_min = val;
            }
            std::vector<double> u(rule.x.size());
            for (std::size_t k = 0; k < rule.x.size(); ++k) {
                const double r = rule.x[k];
                u[k] = rule.w[k] * r * r * r * std::exp(-(e[k] - e_min));
                if (g[static_cast<std::size_t>(i)]) u[k] *= g[static_cast<std::size_t>(i)](r);
            }
            return u;
        };
        std::vector<double> v = site_vec(0);
        for (int i = 1; i < n; ++i) {
            const auto& ra = rules_[static_cast<std::size_t>(i - 1)];
            const auto& rb = rules_[static_cast<std::size_t>(i)];
            std::vector<double> bond_e(ra.x.size() * rb.x.size());
            double b_min = 0.0;
            for (std::size_t k = 0; k < ra.x.size(); ++k) {
                for (std::size_t l = 0; l < rb.x.size(); ++l) {
                    const double be = m_.has_bonds() ? bond_energy(m_, ra.x[k], rb.x[l]) : 0.0;
                    bond_e[k * rb.x.size() + l] = be;
                    if ((k == 0 && l == 0) || be < b_min) b_min = be;
                }
            }
            const std::vector<double> u = site_vec(i);
            std::vector<double> next(rb.x.size(), 0.0);
            for (std::size_t l = 0; l < rb.x.size(); ++l) {
                double s = 0.0;
                for (std::size_t k = 0; k < ra.x.size(); ++k) {
                    s += v[k] * std::exp(-(bond_e[k * rb.x.size() + l] - b_min));
                }
                next[l] = s * u[l];
            }
            v = std::move(next);
        }
        double z = 0.0;
        for (double x : v) z += x;
        return z;
    }

    LatticeConfig cfg_;
    ModelSpec m_;
    std::vector<QuadRule> rules_;
    std::vector<double> cut_;
    double d_left_ = 0.0, d_right_ = 0.0;
};

// ---- consistency of the local specification -------------------------------

struct DlrReport {
    double lhs = 0.0;   // E^{window}[f]
    double rhs = 0.0;   // E^{window}[E^{sub, .} f]
    double diff = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Conditioning a window expectation on a sub-window must change nothing:
// E^{Lambda}(E^{M, x o omega} f) = E^{Lambda} f for M inside Lambda.  On a
// shared radial grid the identity is exact algebra, so any discrepancy
// beyond roundoff exposes a bond-counting or boundary-resolution bug
// between the two Hamiltonian code paths.
inline DlrReport dlr_check(const ModelSpec& m, const LatticeConfig& cfg, int mlo, int mhi,
                           const std::function<double(const std::vector<double>&)>& f,
                           double tolerance = 1e-6, int n_nodes = 20) {
    if (mlo > mhi || mlo < cfg.lo || mhi > cfg.hi) {
        throw std::invalid_argument("dlr_check: sub-window must sit inside the window");
    }
    const WindowGrid grid(cfg, m, n_nodes);
    DlrReport rep;
    rep.tolerance = tolerance;
    rep.lhs = grid.expectation(f);

    const int lo = cfg.lo;
    const auto inner_expectation = [&](const std::vector<double>& outer) {
        // boundary distances of the sub-window, resolved from outer values
        // inside the window and from the true boundary spins outside it
        double dl = 0.0, dr = 0.0;
        if (m.has_bonds()) {
            dl = (mlo - 1 >= cfg.lo) ? outer[static_cast<std::size_t>(mlo - 1 - lo)]
                                     : cc_distance(cfg.site(cfg.lo - 1));
            dr = (mhi + 1 <= cfg.hi) ? outer[static_cast<std::size_t>(mhi + 1 - lo)]
                                     : cc_distance(cfg.site(cfg.hi + 1));
        }
        const int msz = mhi - mlo + 1;
        std::vector<std::size_t> idx(static_cast<std::size_t>(msz), 0);
        std::vector<double> sub(static_cast<std::size_t>(msz));
        std::vector<double> mixed = outer;
        double z = 0.0, acc = 0.0;
        while (true) {
            double w = 1.0;
            for (int j = 0; j < msz; ++j) {
                const auto& rule = grid.site_rule(mlo - lo + j);
                const double r = rule.x[idx[static_cast<std::size_t>(j)]];
                sub[static_cast<std::size_t>(j)] = r;
                mixed[static_cast<std::size_t>(mlo - lo + j)] = r;
                w *= rule.w[idx[static_cast<std::size_t>(j)]] * r * r * r;
            }
            w *= std::exp(-window_energy_radial(m, sub, dl, dr));
            z += w;
            acc += w * f(mixed);
            int pos = 0;
            while (pos < msz) {
                if (++idx[static_cast<std::size_t>(pos)] <
                    grid.site_rule(mlo - lo + pos).x.size()) break;
                idx[static_cast<std::size_t>(pos)] = 0;
                ++pos;
            }
            if (pos == msz) break;
        }
        return acc / z;
    };

    rep.rhs = grid.expectation(inner_expectation);
    rep.diff = std::abs(rep.lhs - rep.rhs);
    rep.pass = rep.diff <= tolerance;
    return rep;
}

// ---- finiteness diagnostics for the confined two-site integral ------------

struct HstarReport {
    double L = 0.0;
    double min_two_site_integral = 0.0;  // worst integral of e^{-H} over B_L x B_L
    double integral_bound = 0.0;         // reciprocal of that
    double max_energy = 0.0;             // worst H over scanned boundaries and spins
    double pointwise_bound = 0.0;        // exp of that
};

// Scans the two-site window {i-1, i+1} conditioned on boundary spins at
// {i-2, i, i+2}, everything confined to the ball B_L: reports the reciprocal
// lower bound on the window integral of e^{-H} and the reciprocal pointwise
// lower bound on e^{-H} itself.  Radial grids suffice because every shipped
// family is radial and the scan is a report, not a proof.
inline HstarReport hstar_diagnostic(const ModelSpec& m, double L, int n_scan = 9,
                                    int n_nodes = 64) {
    if (!(L > 0.0)) throw std::invalid_argument("hstar_diagnostic: L must be positive");
    if (n_scan < 2) throw std::invalid_argument("hstar_diagnostic: need a scan grid");
    const double sigma = radial_pushforward_sigma();
    const QuadRule rule = gauss_legendre(n_nodes, 0.0, L);

    SiteContext ctx;
    ctx.neighbor_d = {0.0, 0.0};
    const auto one_site_energy = [&](double r, double da, double db) {
        ctx.neighbor_d[0] = da;
        ctx.neighbor_d[1] = db;
        return conditional_energy(m, r, ctx);
    };
    // integral over one site of the (disconnected) two-site window; the
    // window integral factorizes across the two sites
    const auto one_site_integral = [&](double da, double db) {
        double acc = 0.0;
        for (std::size_t k = 0; k < rule.x.size(); ++k) {
            const double r = rule.x[k];
            acc += rule.w[k] * r * r * r * std::exp(-one_site_energy(r, da, db));
        }
        return sigma * acc;
    };

    std::vector<double> grid(static_cast<std::size_t>(n_scan));
    for (int i = 0; i < n_scan; ++i) grid[static_cast<std::size_t>(i)] = L * i / (n_scan - 1);

    HstarReport rep;
    rep.L = L;
    bool first = true;
    for (double da : grid) {
        for (double db : grid) {
            const double I = one_site_integral(da, db);
            for (double dc : grid) {
                const double J2 = one_site_integral(db, dc);
                if (first || I * J2 < rep.min_two_site_integral) {
                    rep.min_two_site_integral = I * J2;
                }
                first = false;
            }
        }
    }
    first = true;
    for (double da : grid) {
        for (double db : grid) {
            for (double dc : grid) {
                for (double ra : grid) {
                    for (double rb : grid) {
                        const double H = one_site_energy(ra, da, db) + one_site_energy(rb, db, dc);
                        if (first || H > rep.max_energy) rep.max_energy = H;
                        first = false;
                    }
                }
            }
        }
    }
    if (!(rep.min_two_site_integral > 0.0)) {
        throw std::runtime_error("hstar_diagnostic: window integral underflowed to zero");
    }
    rep.integral_bound = 1.0 / rep.min_two_site_integral;
    rep.pointwise_bound = std::exp(rep.max_energy);
    return rep;
}

} // namespace heislab
