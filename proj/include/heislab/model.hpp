#pragma once
// Lattice model specifications on the 1-D chain with nearest-neighbor bonds,
// spins in the Heisenberg group, and Hamiltonians built from the CC distance:
//
//   H = sum_{i in window} phase(d(x_i)) + bond terms
//
// Families:
//   ip_quadratic  phase alpha d^p, bonds eps[(d_i + rho d_j)^2 + (d_j + rho d_i)^2]
//   ip_power      phase alpha d^p, bonds eps[(d_i + rho d_j)^s + (d_j + rho d_i)^s]
//   ex1_diff      phase beta d^s,  bonds J (d_i - d_j)^2
//   ex2_sum       phase beta d^s,  bonds J (d_i + d_j)^p
//   free          phase beta d^p,  no bonds
//
// Bond orientation: the asymmetric pair potentials (ip_*) include both
// orientations of every bond touching the window; the symmetric ones count
// each bond once.  Both conventions make the family of finite-window kernels
// consistent (the conditional of a window on a sub-window is exactly the
// sub-window kernel), which the DLR tests verify.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heislab/cc_metric.hpp"
#include "heislab/group.hpp"

namespace heislab {

enum class Family { ip_quadratic, ip_power, ex1_diff, ex2_sum, free };

inline std::string family_name(Family f) {
    switch (f) {
        case Family::ip_quadratic: return "ip_quadratic";
        case Family::ip_power: return "ip_power";
        case Family::ex1_diff: return "ex1_diff";
        case Family::ex2_sum: return "ex2_sum";
        case Family::free: return "free";
    }
    return "?";
}

struct ModelSpec {
    Family family = Family::free;
    double q = 2.0;           // Dirichlet exponent, in (1, 2]
    double p = 2.0;           // conjugate exponent: phase power (ip), bond power (ex2)
    double s = 1.0;           // phase power (ex1/ex2), bond power (ip_power)
    double phase_coef = 1.0;  // alpha (ip, free) / beta (ex1, ex2)
    double epsilon = 0.0;     // ip bond coefficient
    double rho = 1.0;         // ip bond asymmetry
    double J = 0.0;           // ex bond coefficient

    double phase_exponent() const {
        switch (family) {
            case Family::ex1_diff:
            case Family::ex2_sum: return s;
            default: return p;
        }
    }

    bool has_bonds() const { return family != Family::free; }

    double bond_coef() const {
        switch (family) {
            case Family::ip_quadratic:
            case Family::ip_power: return epsilon;
            case Family::ex1_diff:
            case Family::ex2_sum: return J;
            case Family::free: return 0.0;
        }
        return 0.0;
    }
};

// ---- validation ----------------------------------------------------------

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
};

inline ValidationReport validate(const ModelSpec& m) {
    ValidationReport rep;
    auto err = [&](const std::string& s) { rep.errors.push_back(s); };
    auto warn = [&](const std::string& s) { rep.warnings.push_back(s); };

    if (!(m.q > 1.0 && m.q <= 2.0)) err("q must lie in (1, 2]");
    if (!(m.phase_coef > 0.0)) err("phase coefficient must be positive");

    const double p_dual = m.q / (m.q - 1.0);
    switch (m.family) {
        case Family::ip_quadratic:
        case Family::ip_power:
            if (std::abs(m.p - p_dual) > 1e-9)
                err("p must be conjugate to q (1/p + 1/q = 1)");
            if (!(m.epsilon * m.rho > 0.0))
                err("need epsilon * rho > 0");
            if (m.family == Family::ip_quadratic && m.p <= 2.0 + 1e-12) {
                // integrability of the one-site kernel: the d^2 coefficient
                // alpha + 2 eps (1 + rho^2) must stay positive (2 neighbors)
                if (!(m.epsilon > -m.phase_coef / 4.0))
                    err("p = 2 requires epsilon > -alpha/4");
                if (!(m.phase_coef + 2.0 * m.epsilon * (1.0 + m.rho * m.rho) > 0.0))
                    err("one-site kernel not normalizable: alpha + 2 eps (1 + rho^2) <= 0");
            }
            if (m.family == Family::ip_power) {
                if (!(m.p > m.s && m.s > 2.0))
                    err("ip_power requires p > s > 2");
                if (std::floor(m.s) != m.s && !(m.rho > 0.0 && m.epsilon > 0.0))
                    err("non-integer bond power needs epsilon > 0 and rho > 0 "
                        "(negative base under a fractional power)");
            }
            break;
        case Family::ex1_diff:
            if (!(m.s >= 1.0 && m.s < 2.0))
                err("ex1_diff phase power must satisfy 1 <= s < 2 "
                    "(s < 1 is outside the verified regime)");
            if (m.J < 0.0) err("J must be nonnegative");
            break;
        case Family::ex2_sum:
            if (std::abs(m.p - p_dual) > 1e-9)
                err("p must be conjugate to q (1/p + 1/q = 1)");
            if (!(m.s >= 1.0 && m.s < m.p))
                err("ex2_sum phase power must satisfy 1 <= s < p");
            if (m.J < 0.0) err("J must be nonnegative");
            break;
        case Family::free:
            if (!(m.p >= 1.0)) err("free phase power must be >= 1");
            break;
    }
    if (m.has_bonds() && m.family != Family::ip_quadratic && m.family != Family::ip_power) {
        if (!(m.J < 1.0)) err("J must be < 1 (weak coupling regime)");
        if (m.J > 0.5) warn("J is large; the weak-coupling hypotheses want J small");
    }
    return rep;
}

// ---- energies in radial form ---------------------------------------------

inline double phase_energy(const ModelSpec& m, double r) {
    return m.phase_coef * std::pow(r, m.phase_exponent());
}

inline double phase_energy_deriv(const ModelSpec& m, double r) {
    const double e = m.phase_exponent();
    return m.phase_coef * e * std::pow(r, e - 1.0);
}

// energy of one bond between radial values du and dv (du on the window side
// whose gradient we track; symmetric families do not care)
inline double bond_energy(const ModelSpec& m, double du, double dv) {
    switch (m.family) {
        case Family::ex1_diff: {
            const double t = du - dv;
            return m.J * t * t;
        }
        case Family::ex2_sum:
            return m.J * std::pow(du + dv, m.p);
        case Family::ip_quadratic: {
            const double a = du + m.rho * dv, b = dv + m.rho * du;
            return m.epsilon * (a * a + b * b);
        }
        case Family::ip_power: {
            const double a = du + m.rho * dv, b = dv + m.rho * du;
            return m.epsilon * (std::pow(a, m.s) + std::pow(b, m.s));
        }
        case Family::free: return 0.0;
    }
    return 0.0;
}

// d/d(du) of bond_energy
inline double bond_energy_deriv(const ModelSpec& m, double du, double dv) {
    switch (m.family) {
        case Family::ex1_diff:
            return 2.0 * m.J * (du - dv);
        case Family::ex2_sum:
            return m.J * m.p * std::pow(du + dv, m.p - 1.0);
        case Family::ip_quadratic:
            return m.epsilon * (2.0 * (du + m.rho * dv) + 2.0 * m.rho * (dv + m.rho * du));
        case Family::ip_power:
            return m.epsilon * m.s *
                   (std::pow(du + m.rho * dv, m.s - 1.0) +
                    m.rho * std::pow(dv + m.rho * du, m.s - 1.0));
        case Family::free: return 0.0;
    }
    return 0.0;
}

// conditional one-site energy given the d-values of the neighbors
struct SiteContext {
    std::vector<double> neighbor_d;
};

inline double conditional_energy(const ModelSpec& m, double r, const SiteContext& ctx) {
    double e = phase_energy(m, r);
    for (double dv : ctx.neighbor_d) e += bond_energy(m, r, dv);
    return e;
}

inline double conditional_energy_deriv(const ModelSpec& m, double r, const SiteContext& ctx) {
    double e = phase_energy_deriv(m, r);
    for (double dv : ctx.neighbor_d) e += bond_energy_deriv(m, r, dv);
    return e;
}

// Radial weight of the one-site conditional kernel: the pushforward of
// Lebesgue measure under d has density proportional to r^3 (ball volumes grow
// as r^4), and the angular constant cancels in every normalized expectation.
inline std::function<double(double)> radial_weight(const ModelSpec& m, const SiteContext& ctx) {
    return [m, ctx](double r) {
        return r * r * r * std::exp(-conditional_energy(m, r, ctx));
    };
}

// ---- window configurations ------------------------------------------------

// A finite window [lo, hi] of the chain with boundary spins at lo-1 and hi+1.
struct LatticeConfig {
    int lo = 0, hi = -1;
    std::vector<GroupElement> spins;  // interior, indexed i - lo
    std::optional<GroupElement> left_boundary;   // site lo - 1
    std::optional<GroupElement> right_boundary;  // site hi + 1

    int size() const { return hi - lo + 1; }

    bool in_window(int i) const { return i >= lo && i <= hi; }

    const GroupElement& site(int i) const {
        if (in_window(i)) return spins.at(static_cast<std::size_t>(i - lo));
        if (i == lo - 1 && left_boundary) return *left_boundary;
        if (i == hi + 1 && right_boundary) return *right_boundary;
        throw std::out_of_range("site " + std::to_string(i) +
                                " is neither interior nor a supplied boundary site");
    }
};

inline LatticeConfig make_config(int lo, int hi, const GroupElement& left,
                                 const GroupElement& right) {
    if (hi < lo) throw std::invalid_argument("window [lo, hi] is empty");
    LatticeConfig c;
    c.lo = lo;
    c.hi = hi;
    c.spins.assign(static_cast<std::size_t>(hi - lo + 1), identity());
    c.left_boundary = left;
    c.right_boundary = right;
    return c;
}

struct HamiltonianValue {
    double total = 0.0;
    std::vector<double> per_site_phase;        // window sites, left to right
    std::vector<double> per_bond_interaction;  // bonds (lo-1,lo) .. (hi,hi+1)
};

// Window Hamiltonian: phase on interior sites plus every bond touching the
// window, with frozen boundary values on outside endpoints.
inline HamiltonianValue hamiltonian(const LatticeConfig& cfg, const ModelSpec& m) {
    if (cfg.size() <= 0) throw std::invalid_argument("hamiltonian: empty window");
    if (m.has_bonds() && (!cfg.left_boundary || !cfg.right_boundary)) {
        throw std::invalid_argument("hamiltonian: a bond reaches outside the window "
                                    "but the boundary spin there is missing");
    }
    HamiltonianValue H;
    std::vector<double> d(static_cast<std::size_t>(cfg.size() + 2));
    for (int i = cfg.lo - 1; i <= cfg.hi + 1; ++i) {
        const bool have = cfg.in_window(i) || (i == cfg.lo - 1 && cfg.left_boundary) ||
                          (i == cfg.hi + 1 && cfg.right_boundary);
        d[static_cast<std::size_t>(i - cfg.lo + 1)] = have ? cc_distance(cfg.site(i)) : 0.0;
    }
    for (int i = cfg.lo; i <= cfg.hi; ++i) {
        const double ph = phase_energy(m, d[static_cast<std::size_t>(i - cfg.lo + 1)]);
        H.per_site_phase.push_back(ph);
        H.total += ph;
    }
    if (m.has_bonds()) {
        for (int i = cfg.lo - 1; i <= cfg.hi; ++i) {  // bond {i, i+1}
            const double du = d[static_cast<std::size_t>(i - cfg.lo + 1)];
            const double dv = d[static_cast<std::size_t>(i - cfg.lo + 2)];
            const double be = bond_energy(m, du, dv);
            H.per_bond_interaction.push_back(be);
            H.total += be;
        }
    }
    return H;
}

// Analytic horizontal gradient of the window Hamiltonian at one interior
// site: H depends on x_i through r = d(x_i) only, so
//   grad_i H = (dH/dr) grad d(x_i)
// with grad d from the metric module (off the axis).
inline HorizontalVector grad_hamiltonian_site(const LatticeConfig& cfg, const ModelSpec& m,
                                              int i) {
    if (!cfg.in_window(i)) throw std::out_of_range("grad_hamiltonian_site: site outside window");
    SiteContext ctx;
    if (m.has_bonds()) {
        ctx.neighbor_d.push_back(cc_distance(cfg.site(i - 1)));
        ctx.neighbor_d.push_back(cc_distance(cfg.site(i + 1)));
    }
    const double r = cc_distance(cfg.site(i));
    const double dH = conditional_energy_deriv(m, r, ctx);
    const HorizontalVector gd = sub_gradient(distance_field(), cfg.site(i));
    return {dH * gd.v1, dH * gd.v2};
}

// d-values of a config's window sites; planar spins (r,0,0) realize a
// prescribed radial profile exactly since d((r,0,0)) = r.
inline GroupElement planar_spin(double r) { return {r, 0.0, 0.0}; }

// ---- flat key-value model files ------------------------------------------
//
// Format: '#' comments, [section] headers, key = value lines.  Sections:
// [model] family parameters, [window] lo/hi, [boundary] and optional
// [interior] with site.<index> = x1,x2,x3 triples.

struct ModelFile {
    ModelSpec spec;
    int lo = 0, hi = 0;
    std::map<int, GroupElement> boundary;
    std::map<int, GroupElement> interior;
    int schema_version = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line_no) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": expected a number, got '" + v + "'");
    }
}

inline GroupElement parse_triple(const std::string& v, int line_no) {
    std::istringstream ss(v);
    std::string part;
    double c[3];
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, part, ',')) {
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": expected x1,x2,x3 triple, got '" + v + "'");
        }
        c[i] = parse_double(trim(part), line_no);
    }
    if (std::getline(ss, part, ',')) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": too many components");
    }
    return {c[0], c[1], c[2]};
}

} // namespace detail

inline Family parse_family(const std::string& name) {
    if (name == "ip_quadratic") return Family::ip_quadratic;
    if (name == "ip_power") return Family::ip_power;
    if (name == "ex1_diff") return Family::ex1_diff;
    if (name == "ex2_sum") return Family::ex2_sum;
    if (name == "free") return Family::free;
    throw std::invalid_argument("unknown family '" + name + "'");
}

inline ModelFile parse_model_text(const std::string& text) {
    ModelFile mf;
    std::string section;
    bool family_seen = false, p_given = false, q_given = false;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw std::invalid_argument("line " + std::to_string(line_no) + ": unterminated section header");
            }
            section = line.substr(1, line.size() - 2);
            if (section != "model" && section != "window" && section != "boundary" && section != "interior") {
                throw std::invalid_argument("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (section.empty()) {
            if (key == "schema_version") {
                mf.schema_version = static_cast<int>(detail::parse_double(val, line_no));
                if (mf.schema_version != 1) {
                    throw std::invalid_argument("line " + std::to_string(line_no) +
                                                ": unsupported schema_version " + val);
                }
                continue;
            }
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": key '" + key + "' outside any section");
        }
        if (section == "model") {
            if (key == "family") {
                try {
                    mf.spec.family = parse_family(val);
                } catch (const std::invalid_argument& e) {
                    throw std::invalid_argument("line " + std::to_string(line_no) + ": " +
                                                e.what());
                }
                family_seen = true;
            }
            else if (key == "q") { mf.spec.q = detail::parse_double(val, line_no); q_given = true; }
            else if (key == "p") { mf.spec.p = detail::parse_double(val, line_no); p_given = true; }
            else if (key == "s") mf.spec.s = detail::parse_double(val, line_no);
            else if (key == "alpha" || key == "beta" || key == "phase_coef")
                mf.spec.phase_coef = detail::parse_double(val, line_no);
            else if (key == "epsilon") mf.spec.epsilon = detail::parse_double(val, line_no);
            else if (key == "rho") mf.spec.rho = detail::parse_double(val, line_no);
            else if (key == "J") mf.spec.J = detail::parse_double(val, line_no);
            else throw std::invalid_argument("line " + std::to_string(line_no) +
                                             ": unknown model key '" + key + "'");
        } else if (section == "window") {
            if (key == "lo") mf.lo = static_cast<int>(detail::parse_double(val, line_no));
            else if (key == "hi") mf.hi = static_cast<int>(detail::parse_double(val, line_no));
            else throw std::invalid_argument("line " + std::to_string(line_no) +
                                             ": unknown window key '" + key + "'");
        } else {  // boundary / interior
            if (key.rfind("site.", 0) != 0) {
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            ": expected site.<index> = x1,x2,x3");
            }
            const int idx = static_cast<int>(detail::parse_double(key.substr(5), line_no));
            const GroupElement g = detail::parse_triple(val, line_no);
            (section == "boundary" ? mf.boundary : mf.interior)[idx] = g;
        }
    }
    if (!family_seen) throw std::invalid_argument("model file missing 'family'");
    // derive the conjugate exponent when only q was given (ip and ex2 tie p to q)
    if (!p_given && q_given &&
        (mf.spec.family == Family::ip_quadratic || mf.spec.family == Family::ip_power ||
         mf.spec.family == Family::ex2_sum)) {
        mf.spec.p = mf.spec.q / (mf.spec.q - 1.0);
    }
    return mf;
}

inline LatticeConfig config_from_model_file(const ModelFile& mf) {
    LatticeConfig cfg;
    cfg.lo = mf.lo;
    cfg.hi = mf.hi;
    if (cfg.size() <= 0) throw std::invalid_argument("model file window is empty");
    cfg.spins.assign(static_cast<std::size_t>(cfg.size()), identity());
    for (const auto& [i, g] : mf.interior) {
        if (!cfg.in_window(i)) throw std::invalid_argument("interior site " + std::to_string(i) + " outside window");
        cfg.spins[static_cast<std::size_t>(i - cfg.lo)] = g;
    }
    for (const auto& [i, g] : mf.boundary) {
        if (i == cfg.lo - 1) cfg.left_boundary = g;
        else if (i == cfg.hi + 1) cfg.right_boundary = g;
        else throw std::invalid_argument("boundary site " + std::to_string(i) +
                                         " is not adjacent to the window");
    }
    if (mf.spec.has_bonds() && (!cfg.left_boundary || !cfg.right_boundary)) {
        throw std::invalid_argument("model file must supply boundary spins at sites " +
                                    std::to_string(cfg.lo - 1) + " and " + std::to_string(cfg.hi + 1));
    }
    return cfg;
}

inline std::string serialize_model(const ModelFile& mf) {
    std::ostringstream out;
    out.precision(17);
    out << "schema_version = " << mf.schema_version << "\n[model]\n";
    out << "family = " << family_name(mf.spec.family) << "\n";
    out << "q = " << mf.spec.q << "\np = " << mf.spec.p << "\ns = " << mf.spec.s << "\n";
    out << "phase_coef = " << mf.spec.phase_coef << "\n";
    out << "epsilon = " << mf.spec.epsilon << "\nrho = " << mf.spec.rho << "\nJ = " << mf.spec.J << "\n";
    out << "[window]\nlo = " << mf.lo << "\nhi = " << mf.hi << "\n";
    out << "[boundary]\n";
    for (const auto& [i, g] : mf.boundary) {
        out << "site." << i << " = " << g.x1 << "," << g.x2 << "," << g.x3 << "\n";
    }
    if (!mf.interior.empty()) {
        out << "[interior]\n";
        for (const auto& [i, g] : mf.interior) {
            out << "site." << i << " = " << g.x1 << "," << g.x2 << "," << g.x3 << "\n";
        }
    }
    return out.str();
}

} // namespace heislab
