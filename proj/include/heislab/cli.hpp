#pragma once
// Command-line front end.  One subcommand per tool; every run writes
// <out>/<subcommand>.csv plus <out>/<subcommand>.json and prints either the
// CSV or the manifest to stdout (--format).  Exit code 0 means the check
// passed or the tool only reports, 1 means a verification failed, 2 means
// the invocation or an input file was unusable.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "heislab/block_dynamics.hpp"
#include "heislab/cc_metric.hpp"
#include "heislab/functionals.hpp"
#include "heislab/group.hpp"
#include "heislab/model.hpp"
#include "heislab/report.hpp"
#include "heislab/sampler.hpp"
#include "heislab/ubound.hpp"
#include "heislab/util.hpp"

namespace heislab {

namespace cli {

struct CommonOpts {
    std::string out = default_out_dir();
    std::string format = "csv";
    std::uint64_t seed = 1;
    int threads = default_threads();
};

inline void add_common(CLI::App* sub, CommonOpts& c) {
    sub->add_option("--out", c.out, "directory for the CSV and JSON artifacts")
        ->capture_default_str();
    sub->add_option("--format", c.format, "stdout format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--seed", c.seed, "base random seed")->capture_default_str();
    sub->add_option("--threads", c.threads,
                    "parallel pool size; results do not depend on it");
}

inline int emit(const CommonOpts& c, const std::string& stem, const CsvTable& table,
                RunManifest manifest, const WallTimer& timer, int code,
                bool quiet_stdout = false) {
    manifest.wall_ms = timer.ms();
    write_artifacts(c.out, stem, table, manifest);
    if (!quiet_stdout) {
        if (c.format == "json") {
            std::cout << manifest.to_json().dump(2) << "\n";
        } else {
            std::cout << table.to_string();
        }
    }
    return code;
}

// ---- small parsers ---------------------------------------------------------

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad number '" + tok + "' in '" + s + "'");
        }
        if (pos != tok.size()) {
            throw std::invalid_argument("trailing characters in number '" + tok + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty number list");
    return out;
}

inline GroupElement parse_point(const std::string& s) {
    const std::vector<double> v = parse_list(s);
    if (v.size() != 3) {
        throw std::invalid_argument("expected x1,x2,x3 but got '" + s + "'");
    }
    return {v[0], v[1], v[2]};
}

inline std::vector<std::array<double, 2>> parse_pairs(const std::string& s) {
    std::vector<std::array<double, 2>> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
        const std::vector<double> v = parse_list(tok);
        if (v.size() != 2) {
            throw std::invalid_argument("expected a,b pairs separated by ';' in '" + s + "'");
        }
        out.push_back({v[0], v[1]});
    }
    if (out.empty()) throw std::invalid_argument("empty pair list");
    return out;
}

inline Schedule parse_schedule(const std::string& s) {
    if (s == "sequential") return Schedule::sequential;
    if (s == "checkerboard") return Schedule::checkerboard;
    throw std::invalid_argument("schedule must be sequential or checkerboard");
}

inline ModelFile load_model_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open model file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    ModelFile mf = parse_model_text(ss.str());
    const ValidationReport v = validate(mf.spec);
    for (const std::string& w : v.warnings) std::cerr << path << ": warning: " << w << "\n";
    if (!v.ok()) {
        std::string msg = "model file " + path + " rejected:";
        for (const std::string& e : v.errors) msg += "\n  " + e;
        throw std::invalid_argument(msg);
    }
    return mf;
}

inline nlohmann::json model_json(const ModelFile& mf) {
    nlohmann::json j;
    j["schema_version"] = mf.schema_version;
    j["family"] = family_name(mf.spec.family);
    j["q"] = mf.spec.q;
    j["p"] = mf.spec.p;
    j["s"] = mf.spec.s;
    j["phase_coef"] = mf.spec.phase_coef;
    j["epsilon"] = mf.spec.epsilon;
    j["rho"] = mf.spec.rho;
    j["J"] = mf.spec.J;
    j["lo"] = mf.lo;
    j["hi"] = mf.hi;
    for (const auto& [i, g] : mf.boundary) {
        j["boundary"][std::to_string(i)] = {g.x1, g.x2, g.x3};
    }
    for (const auto& [i, g] : mf.interior) {
        j["interior"][std::to_string(i)] = {g.x1, g.x2, g.x3};
    }
    return j;
}

// test functions for the one-site integral bound; analytic radial slopes
inline std::vector<RadialCylinder> integral_family() {
    return {
        {"1", [](const std::vector<double>&) { return 1.0; },
         [](const std::vector<double>&, int) { return 0.0; }},
        {"1+d", [](const std::vector<double>& r) { return 1.0 + r[0]; },
         [](const std::vector<double>&, int) { return 1.0; }},
        {"d^2", [](const std::vector<double>& r) { return r[0] * r[0]; },
         [](const std::vector<double>& r, int) { return 2.0 * r[0]; }},
    };
}

// positive cylinders touching the first, middle and every site of a window
inline std::vector<RadialCylinder> telescope_family(int n_sites) {
    const std::size_t mid = static_cast<std::size_t>(n_sites) / 2;
    return {
        {"1+d_first", [](const std::vector<double>& r) { return 1.0 + r[0]; }, nullptr},
        {"2+d_mid", [mid](const std::vector<double>& r) { return 2.0 + r[mid]; }, nullptr},
        {"1+prod d/(1+d)",
         [](const std::vector<double>& r) {
             double p = 1.0;
             for (double x : r) p *= x / (1.0 + x);
             return 1.0 + p;
         },
         nullptr},
    };
}

inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(xs[i]);
        my += std::log(ys[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(xs[i]) - mx;
        sxy += dx * (std::log(ys[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline std::string flag(bool b) { return b ? "1" : "0"; }

// ---- subcommand handlers ---------------------------------------------------

struct ModelOpts {
    CommonOpts c;
    std::string file;
};

inline int run_model_validate(const ModelOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.file);
    CsvTable t;
    t.header = {"key", "value"};
    t.add_row({"schema_version", std::to_string(mf.schema_version)});
    t.add_row({"family", family_name(mf.spec.family)});
    t.add_row({"q", num(mf.spec.q)});
    t.add_row({"p", num(mf.spec.p)});
    t.add_row({"s", num(mf.spec.s)});
    t.add_row({"phase_coef", num(mf.spec.phase_coef)});
    t.add_row({"epsilon", num(mf.spec.epsilon)});
    t.add_row({"rho", num(mf.spec.rho)});
    t.add_row({"J", num(mf.spec.J)});
    t.add_row({"lo", std::to_string(mf.lo)});
    t.add_row({"hi", std::to_string(mf.hi)});
    for (const auto& [i, g] : mf.boundary) {
        t.add_row({"boundary." + std::to_string(i),
                   num(g.x1) + "," + num(g.x2) + "," + num(g.x3)});
    }
    RunManifest m;
    m.command = "model validate";
    m.params["file"] = o.file;
    m.params["model"] = model_json(mf);
    return emit(o.c, "model_validate", t, std::move(m), timer, 0);
}

struct DistOpts {
    CommonOpts c;
    std::string point;
    std::string pair;
};

inline int run_dist(const DistOpts& o) {
    WallTimer timer;
    const GroupElement a = parse_point(o.point);
    const GroupElement b = o.pair.empty() ? identity() : parse_point(o.pair);
    const double d = o.pair.empty() ? cc_distance(a) : cc_distance_pair(a, b);
    CsvTable t;
    t.header = {"x1", "x2", "x3", "y1", "y2", "y3", "distance"};
    t.add_row({num(a.x1), num(a.x2), num(a.x3), num(b.x1), num(b.x2), num(b.x3), num(d)});
    RunManifest m;
    m.command = "dist";
    m.params["point"] = o.point;
    if (!o.pair.empty()) m.params["pair"] = o.pair;
    m.params["distance"] = d;
    const int rc = emit(o.c, "dist", t, std::move(m), timer, 0, /*quiet_stdout=*/true);
    if (o.c.format == "json") {
        nlohmann::json j;
        j["distance"] = d;
        std::cout << j.dump() << "\n";
    } else {
        std::cout << num(d) << "\n";
    }
    return rc;
}

struct EikonalOpts {
    CommonOpts c;
    std::size_t n = 1000;
    double radius = 3.0;
    double h = kDefaultStep;
    double tol = 1e-3;
    double exclude = 0.05;
};

inline int run_check_eikonal(const EikonalOpts& o) {
    WallTimer timer;
    const BallCloud cloud = random_ball_cloud(o.radius, o.n, o.c.seed, o.exclude);
    const EikonalReport rep = check_eikonal(cloud.points, o.h);
    const bool pass = rep.max_deviation <= o.tol;
    CsvTable t;
    t.header = {"n_points", "n_excluded", "h",        "tol",      "max_deviation",
                "worst_x1", "worst_x2",   "worst_x3", "pass"};
    t.add_row({std::to_string(rep.n_points), std::to_string(cloud.n_excluded), num(o.h),
               num(o.tol), num(rep.max_deviation), num(rep.worst_point.x1),
               num(rep.worst_point.x2), num(rep.worst_point.x3), flag(pass)});
    RunManifest m;
    m.command = "check-eikonal";
    m.params["n"] = o.n;
    m.params["radius"] = o.radius;
    m.params["h"] = o.h;
    m.params["tol"] = o.tol;
    m.params["exclude_axis_radius"] = o.exclude;
    m.params["seed"] = o.c.seed;
    m.params["max_deviation"] = rep.max_deviation;
    m.params["pass"] = pass;
    return emit(o.c, "check_eikonal", t, std::move(m), timer, pass ? 0 : 1);
}

struct K0Opts {
    CommonOpts c;
    std::size_t n = 1000;
    double radius = 3.0;
    double h = kSecondOrderStep;
    double exclude = 0.05;
    double stability_tol = 0.10;
};

inline int run_estimate_k0(const K0Opts& o) {
    WallTimer timer;
    const BallCloud base = random_ball_cloud(o.radius, o.n, o.c.seed, o.exclude);
    const BallCloud doubled =
        random_ball_cloud(o.radius, 2 * o.n, derive_seed(o.c.seed, 1), o.exclude);
    const K0Report r1 = estimate_K0(base.points, o.h);
    const K0Report r2 = estimate_K0(doubled.points, o.h);
    const double rel = std::abs(r2.K0 - r1.K0) / std::max(std::abs(r1.K0), 1e-12);
    const bool pass = rel <= o.stability_tol;
    CsvTable t;
    t.header = {"cloud", "n_points", "k0", "worst_x1", "worst_x2", "worst_x3"};
    t.add_row({"base", std::to_string(r1.n_points), num(r1.K0), num(r1.worst_point.x1),
               num(r1.worst_point.x2), num(r1.worst_point.x3)});
    t.add_row({"doubled", std::to_string(r2.n_points), num(r2.K0), num(r2.worst_point.x1),
               num(r2.worst_point.x2), num(r2.worst_point.x3)});
    RunManifest m;
    m.command = "estimate-k0";
    m.params["n"] = o.n;
    m.params["radius"] = o.radius;
    m.params["h"] = o.h;
    m.params["exclude_axis_radius"] = o.exclude;
    m.params["seed"] = o.c.seed;
    m.params["k0"] = r1.K0;
    m.params["k0_doubled"] = r2.K0;
    m.params["rel_change"] = rel;
    m.params["stability_tol"] = o.stability_tol;
    m.params["pass"] = pass;
    return emit(o.c, "estimate_k0", t, std::move(m), timer, pass ? 0 : 1);
}

struct BallVolumeOpts {
    CommonOpts c;
    std::string radii = "0.5,1,2,4";
    std::size_t n = 200000;
    double slope_tol = 0.05;
};

inline int run_ball_volume(const BallVolumeOpts& o) {
    WallTimer timer;
    const std::vector<double> radii = parse_list(o.radii);
    if (radii.size() < 2) {
        throw std::invalid_argument("ball-volume needs at least two radii for the slope fit");
    }
    CsvTable t;
    t.header = {"R", "volume", "stderr", "n"};
    std::vector<double> vols;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const BallVolumeEstimate est =
            ball_volume(radii[i], o.n, derive_seed(o.c.seed, i));
        vols.push_back(est.volume);
        t.add_row({num(radii[i]), num(est.volume), num(est.stderr_),
                   std::to_string(est.n_samples)});
    }
    const double slope = loglog_slope(radii, vols);
    const bool pass = std::abs(slope - 4.0) <= o.slope_tol;
    RunManifest m;
    m.command = "ball-volume";
    m.params["radii"] = radii;
    m.params["n"] = o.n;
    m.params["seed"] = o.c.seed;
    m.params["slope"] = slope;
    m.params["slope_tol"] = o.slope_tol;
    m.params["pass"] = pass;
    return emit(o.c, "ball_volume", t, std::move(m), timer, pass ? 0 : 1);
}

struct SampleOpts {
    CommonOpts c;
    std::string model;
    std::size_t sweeps = 5000;
    std::size_t burn = 0;  // 0 = pilot-run choice
    std::string schedule = "sequential";
    double scale = 1.0;
    bool no_tune = false;
};

inline int run_sample(const SampleOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    const LatticeConfig cfg = config_from_model_file(mf);
    const Schedule sched = parse_schedule(o.schedule);
    Chain chain(cfg, mf.spec, o.c.seed, o.scale);
    if (!o.no_tune) tune_proposal_scale(chain, sched);
    const std::size_t burn = o.burn > 0 ? o.burn : detail::auto_burn_in(chain, sched);
    for (std::size_t s = 0; s < burn; ++s) chain.sweep(sched);
    chain.reset_acceptance();
    CsvTable t;
    t.header = {"sweep"};
    for (int i = cfg.lo; i <= cfg.hi; ++i) t.header.push_back("d_" + std::to_string(i));
    for (std::size_t s = 0; s < o.sweeps; ++s) {
        chain.sweep(sched);
        std::vector<std::string> row{std::to_string(s)};
        for (int i = cfg.lo; i <= cfg.hi; ++i) row.push_back(num(chain.site_distance(i)));
        t.add_row(std::move(row));
    }
    RunManifest m;
    m.command = "sample";
    m.params["model"] = model_json(mf);
    m.params["sweeps"] = o.sweeps;
    m.params["burn_in"] = burn;
    m.params["schedule"] = o.schedule;
    m.params["proposal_scale"] = chain.scale();
    m.params["acceptance_rate"] = chain.acceptance_rate();
    m.params["seed"] = o.c.seed;
    return emit(o.c, "sample", t, std::move(m), timer, 0);
}

struct EstimateOpts {
    CommonOpts c;
    std::string model;
    std::size_t sweeps = 20000;
    std::size_t burn = 0;
    int chains = 2;
    std::string schedule = "sequential";
};

inline int run_estimate(const EstimateOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    const LatticeConfig cfg = config_from_model_file(mf);
    SamplerOptions opt;
    opt.n_sweeps = o.sweeps;
    opt.burn_in = o.burn;
    opt.n_chains = o.chains;
    opt.schedule = parse_schedule(o.schedule);
    opt.threads = o.c.threads;
    CsvTable t;
    t.header = {"functional", "value", "stderr", "n", "seed"};
    std::uint64_t k = 0;
    for (const ConfigField& f : default_config_family(mf.spec.p)) {
        const std::uint64_t s = derive_seed(o.c.seed, k++);
        const Estimate est = estimate_expectation(mf.spec, cfg, f.eval, opt, s);
        t.add_row({f.name, num(est.value), num(est.stderr_), std::to_string(est.n_samples),
                   std::to_string(s)});
    }
    RunManifest m;
    m.command = "estimate";
    m.params["model"] = model_json(mf);
    m.params["sweeps"] = o.sweeps;
    m.params["burn_in"] = o.burn;
    m.params["chains"] = o.chains;
    m.params["schedule"] = o.schedule;
    m.params["seed"] = o.c.seed;
    return emit(o.c, "estimate", t, std::move(m), timer, 0);
}

struct ExpMomentOpts {
    CommonOpts c;
    std::string model;
    double eps = 0.05;
    std::string observable = "d";  // d | sum-d
    std::size_t sweeps = 20000;
    std::size_t burn = 0;
    int chains = 2;
};

inline int run_exp_moment(const ExpMomentOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    const LatticeConfig cfg = config_from_model_file(mf);
    std::function<double(const LatticeConfig&)> g;
    if (o.observable == "d") {
        g = [](const LatticeConfig& s) { return cc_distance(s.site(s.lo)); };
    } else if (o.observable == "sum-d") {
        g = [](const LatticeConfig& s) {
            double acc = 0.0;
            for (int i = s.lo; i <= s.hi; ++i) acc += cc_distance(s.site(i));
            return acc;
        };
    } else {
        throw std::invalid_argument("observable must be d or sum-d");
    }
    SamplerOptions opt;
    opt.n_sweeps = o.sweeps;
    opt.burn_in = o.burn;
    opt.n_chains = o.chains;
    opt.threads = o.c.threads;
    const ExpMomentReport rep = exp_moment_estimate(mf.spec, cfg, g, o.eps, opt, o.c.seed);
    CsvTable t;
    t.header = {"observable",   "eps",          "value",   "stderr",
                "n",            "tail_warning", "overflow", "top_fraction"};
    t.add_row({o.observable, num(o.eps), num(rep.est.value), num(rep.est.stderr_),
               std::to_string(rep.est.n_samples), flag(rep.tail_warning),
               flag(rep.overflow), num(rep.top_fraction)});
    RunManifest m;
    m.command = "exp-moment";
    m.params["model"] = model_json(mf);
    m.params["eps"] = o.eps;
    m.params["observable"] = o.observable;
    m.params["sweeps"] = o.sweeps;
    m.params["chains"] = o.chains;
    m.params["seed"] = o.c.seed;
    m.params["tail_warning"] = rep.tail_warning;
    m.params["overflow"] = rep.overflow;
    // divergence evidence is reported, never asserted: exit stays 0
    return emit(o.c, "exp_moment", t, std::move(m), timer, 0);
}

struct UboundPointwiseOpts {
    CommonOpts c;
    std::string model;
    std::size_t n = 100000;
    std::size_t n_calibration = 20000;
    double x_radius = 50.0;
    double x_radius_calibration = 5.0;
    double omega_radius = 10.0;
    double margin = 0.05;
};

inline int run_ubound_pointwise(const UboundPointwiseOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    PointwiseCloudParams prm;
    prm.n = o.n;
    prm.n_calibration = o.n_calibration;
    prm.x_radius = o.x_radius;
    prm.x_radius_calibration = o.x_radius_calibration;
    prm.omega_radius = o.omega_radius;
    prm.margin = o.margin;
    prm.seed = o.c.seed;
    const UBoundReport rep = ubound_pointwise_check(mf.spec, prm);
    CsvTable t;
    t.header = {"family",     "s",         "J",          "q",
                "c_prime",    "a",         "b_coef",     "additive_c",
                "calibration_max", "n_points", "n_skipped", "max_slack",
                "witness_d",  "witness_omega_0", "witness_omega_1", "pass"};
    t.add_row({family_name(mf.spec.family), num(mf.spec.s), num(mf.spec.J), num(mf.spec.q),
               num(rep.constants.c_prime), num(rep.constants.a), num(rep.constants.b_coef),
               num(rep.additive_c), num(rep.calibration_max), std::to_string(rep.n_points),
               std::to_string(rep.n_skipped), num(rep.max_slack), num(rep.witness_d),
               num(rep.witness_omega.size() > 0 ? rep.witness_omega[0] : 0.0),
               num(rep.witness_omega.size() > 1 ? rep.witness_omega[1] : 0.0),
               flag(rep.pass)});
    RunManifest m;
    m.command = "ubound-pointwise";
    m.params["model"] = model_json(mf);
    m.params["n"] = o.n;
    m.params["n_calibration"] = o.n_calibration;
    m.params["x_radius"] = o.x_radius;
    m.params["x_radius_calibration"] = o.x_radius_calibration;
    m.params["omega_radius"] = o.omega_radius;
    m.params["margin"] = o.margin;
    m.params["seed"] = o.c.seed;
    m.params["max_slack"] = rep.max_slack;
    m.params["additive_c"] = rep.additive_c;
    m.params["pass"] = rep.pass;
    return emit(o.c, "ubound_pointwise", t, std::move(m), timer, rep.pass ? 0 : 1);
}

struct UboundIntegralOpts {
    CommonOpts c;
    std::string model;
    std::string boundaries = "0.5,0.5;1,1;2,2;3,3;5,5";
    std::string weight = "distance-power";  // distance-power | hamiltonian
    std::string a_grid = "0.5,1,2,4,8";
    std::string b_grid = "1,2,4,8,16,32";
    std::size_t sweeps = 20000;
    std::size_t burn = 2000;
    int chains = 2;
};

inline int run_ubound_integral(const UboundIntegralOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    const std::vector<std::array<double, 2>> omegas = parse_pairs(o.boundaries);
    IntegralWeight mode;
    if (o.weight == "distance-power") {
        mode = IntegralWeight::distance_power;
    } else if (o.weight == "hamiltonian") {
        mode = IntegralWeight::hamiltonian;
    } else {
        throw std::invalid_argument("weight must be distance-power or hamiltonian");
    }
    SamplerOptions opt;
    opt.n_sweeps = o.sweeps;
    opt.burn_in = o.burn;
    opt.n_chains = o.chains;
    opt.threads = o.c.threads;
    const UBoundIntegralReport rep =
        ubound_integral_check(mf.spec, omegas, integral_family(), parse_list(o.a_grid),
                              parse_list(o.b_grid), mode, opt, o.c.seed);
    CsvTable t;
    t.header = {"omega_0", "omega_1", "b1_floor", "b1_floor_se", "found", "a1", "b1"};
    bool all_found = true;
    for (const UBoundIntegralCase& cse : rep.cases) {
        all_found = all_found && cse.found;
        t.add_row({num(cse.omega[0]), num(cse.omega[1]), num(cse.b1_floor),
                   num(cse.b1_floor_se), flag(cse.found), num(cse.a1), num(cse.b1)});
    }
    const bool pass =
        all_found && (mode != IntegralWeight::distance_power || rep.uniform_found);
    RunManifest m;
    m.command = "ubound-integral";
    m.params["model"] = model_json(mf);
    m.params["boundaries"] = o.boundaries;
    m.params["weight"] = o.weight;
    m.params["a_grid"] = parse_list(o.a_grid);
    m.params["b_grid"] = parse_list(o.b_grid);
    m.params["sweeps"] = o.sweeps;
    m.params["chains"] = o.chains;
    m.params["seed"] = o.c.seed;
    m.params["uniform_found"] = rep.uniform_found;
    m.params["uniform_a1"] = rep.uniform_a1;
    m.params["uniform_b1"] = rep.uniform_b1;
    m.params["pass"] = pass;
    return emit(o.c, "ubound_integral", t, std::move(m), timer, pass ? 0 : 1);
}

struct ScanOpts {
    CommonOpts c;
    std::string model;
    double q = 0.0;  // 0 = take the model exponent
    std::string route = "quadrature";  // quadrature | mc
    int nodes = 60;
    std::size_t sweeps = 30000;
    std::size_t burn = 0;
    int chains = 2;
};

inline int run_ratio_scan(const ScanOpts& o, bool log_sobolev) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    const LatticeConfig cfg = config_from_model_file(mf);
    const double q = o.q > 0.0 ? o.q : mf.spec.q;
    ScanReport rep;
    if (o.route == "quadrature") {
        const WindowGrid grid(cfg, mf.spec, o.nodes);
        const auto family = default_radial_family(mf.spec.p);
        rep = log_sobolev ? ls_ratio_scan(grid, q, family) : sg_ratio_scan(grid, q, family);
    } else if (o.route == "mc") {
        SamplerOptions opt;
        opt.n_sweeps = o.sweeps;
        opt.burn_in = o.burn;
        opt.n_chains = o.chains;
        opt.threads = o.c.threads;
        const auto family = default_config_family(mf.spec.p);
        rep = log_sobolev ? ls_ratio_scan_mc(mf.spec, cfg, q, family, opt, o.c.seed)
                          : sg_ratio_scan_mc(mf.spec, cfg, q, family, opt, o.c.seed);
    } else {
        throw std::invalid_argument("route must be quadrature or mc");
    }
    CsvTable t;
    t.header = {"functional", "numerator", "numerator_se", "denominator", "denominator_se",
                "ratio"};
    for (const ScanEntry& e : rep.entries) {
        t.add_row({e.name, num(e.numerator.value), num(e.numerator.stderr_),
                   num(e.denominator.value), num(e.denominator.stderr_), num(e.ratio)});
    }
    const std::string stem = log_sobolev ? "ls_scan" : "sg_scan";
    RunManifest m;
    m.command = log_sobolev ? "ls-scan" : "sg-scan";
    m.params["model"] = model_json(mf);
    m.params["q"] = q;
    m.params["route"] = o.route;
    m.params["nodes"] = o.nodes;
    m.params["sweeps"] = o.sweeps;
    m.params["chains"] = o.chains;
    m.params["seed"] = o.c.seed;
    m.params["best_ratio"] = rep.best_ratio;
    m.params["witness"] = rep.witness;
    return emit(o.c, stem, t, std::move(m), timer, 0);
}

struct TelescopeOpts {
    CommonOpts c;
    std::string model;
    double q = 0.0;
    double tol = 1e-6;
    int nodes = 20;
};

inline int run_telescope_check(const TelescopeOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    const LatticeConfig cfg = config_from_model_file(mf);
    const double q = o.q > 0.0 ? o.q : mf.spec.q;
    CsvTable t;
    t.header = {"functional", "q", "lhs", "rhs", "term_color0", "term_color1", "diff",
                "tol", "pass"};
    bool all_pass = true;
    for (const RadialCylinder& f : telescope_family(cfg.size())) {
        const TelescopingReport rep =
            entropy_telescoping_check(mf.spec, cfg, f, q, o.tol, o.nodes);
        all_pass = all_pass && rep.pass;
        t.add_row({f.name, num(q), num(rep.lhs), num(rep.rhs), num(rep.term_color0),
                   num(rep.term_color1), num(rep.diff), num(o.tol), flag(rep.pass)});
    }
    RunManifest m;
    m.command = "telescope-check";
    m.params["model"] = model_json(mf);
    m.params["q"] = q;
    m.params["tol"] = o.tol;
    m.params["nodes"] = o.nodes;
    m.params["pass"] = all_pass;
    return emit(o.c, "telescope_check", t, std::move(m), timer, all_pass ? 0 : 1);
}

struct BlockDynamicsOpts {
    CommonOpts c;
    std::string model;
    int nodes = 20;
    int n_max = 50;
    double tol = 1e-3;
    int factor_site = std::numeric_limits<int>::min();  // default: window start
};

inline int run_block_dynamics(const BlockDynamicsOpts& o) {
    WallTimer timer;
    const ModelFile mf = load_model_file(o.model);
    const LatticeConfig cfg = config_from_model_file(mf);
    const int site = o.factor_site == std::numeric_limits<int>::min() ? cfg.lo : o.factor_site;
    if (!cfg.in_window(site)) {
        throw std::invalid_argument("factor site " + std::to_string(site) +
                                    " is outside the window");
    }
    std::vector<std::function<double(double)>> factors(
        static_cast<std::size_t>(cfg.size()));
    factors[static_cast<std::size_t>(site - cfg.lo)] = [](double r) { return r; };
    BlockDynamicsParams prm;
    prm.n_nodes = o.nodes;
    prm.n_max = o.n_max;
    const BlockDynamicsRun run = block_dynamics_iterate(mf.spec, cfg, factors, prm);
    const double scale = std::max(1.0, std::abs(run.target));
    const bool converged = run.residuals.back() <= o.tol * scale;
    const bool pass = converged && run.richardson_ok;
    CsvTable t;
    t.header = {"n", "residual"};
    for (std::size_t i = 0; i < run.residuals.size(); ++i) {
        t.add_row({std::to_string(i), num(run.residuals[i])});
    }
    RunManifest m;
    m.command = "block-dynamics";
    m.params["model"] = model_json(mf);
    m.params["nodes"] = o.nodes;
    m.params["n_max"] = o.n_max;
    m.params["tol"] = o.tol;
    m.params["factor_site"] = site;
    m.params["target"] = run.target;
    m.params["iterations_done"] = run.iterations_done;
    m.params["final_residual"] = run.residuals.back();
    m.params["richardson_diff"] = run.richardson_diff;
    m.params["target_refined_diff"] = run.target_refined_diff;
    m.params["richardson_ok"] = run.richardson_ok;
    m.params["converged"] = converged;
    m.params["pass"] = pass;
    return emit(o.c, "block_dynamics", t, std::move(m), timer, pass ? 0 : 1);
}

struct CdProbeOpts {
    CommonOpts c;
    std::string rhos = "-1e6,0,1e6";
    double h = kDefaultStep;
};

inline int run_cd_probe(const CdProbeOpts& o) {
    WallTimer timer;
    const std::vector<double> rhos = parse_list(o.rhos);
    const auto trials = default_cd_trials();
    const auto points = default_cd_points();
    CsvTable t;
    t.header = {"rho", "min_value", "x1", "x2", "x3", "field_index", "negative"};
    bool all_negative = true;
    for (double rho : rhos) {
        const CdWitness w = cd_condition_probe(trials, points, rho, o.h);
        all_negative = all_negative && w.negative;
        t.add_row({num(rho), num(w.min_value), num(w.point.x1), num(w.point.x2),
                   num(w.point.x3), std::to_string(w.field_index), flag(w.negative)});
    }
    RunManifest m;
    m.command = "cd-probe";
    m.params["rhos"] = rhos;
    m.params["h"] = o.h;
    m.params["trial_fields"] = trials.size();
    m.params["sample_points"] = points.size();
    m.params["pass"] = all_negative;
    return emit(o.c, "cd_probe", t, std::move(m), timer, all_negative ? 0 : 1);
}

}  // namespace cli

// argv without the program name, natural order
inline int run_cli(std::vector<std::string> args) {
    CLI::App app{"numerical laboratory for Heisenberg-group Gibbs measures"};
    app.require_subcommand(1);
    int code = 0;

    cli::ModelOpts model_o;
    CLI::App* model = app.add_subcommand("model", "model file tools");
    model->require_subcommand(1);
    CLI::App* model_validate =
        model->add_subcommand("validate", "parse a model file and echo the spec");
    model_validate->add_option("--file", model_o.file, "model file path")
        ->required()
        ->check(CLI::ExistingFile);
    cli::add_common(model_validate, model_o.c);
    model_validate->callback([&]() { code = cli::run_model_validate(model_o); });

    cli::DistOpts dist_o;
    CLI::App* dist = app.add_subcommand("dist", "Carnot-Caratheodory distance of a point");
    dist->add_option("--point", dist_o.point, "x1,x2,x3")->required();
    dist->add_option("--pair", dist_o.pair, "second point; distance is between the two");
    cli::add_common(dist, dist_o.c);
    dist->callback([&]() { code = cli::run_dist(dist_o); });

    cli::EikonalOpts eik_o;
    CLI::App* eik = app.add_subcommand(
        "check-eikonal", "unit-gradient property of the distance on a random cloud");
    eik->add_option("--n", eik_o.n, "cloud size")->capture_default_str();
    eik->add_option("--radius", eik_o.radius, "ball radius")->capture_default_str();
    eik->add_option("--step", eik_o.h, "difference step")->capture_default_str();
    eik->add_option("--tol", eik_o.tol, "max allowed deviation")->capture_default_str();
    eik->add_option("--exclude-axis", eik_o.exclude, "drop points this close to the axis")
        ->capture_default_str();
    cli::add_common(eik, eik_o.c);
    eik->callback([&]() { code = cli::run_check_eikonal(eik_o); });

    cli::K0Opts k0_o;
    CLI::App* k0 = app.add_subcommand(
        "estimate-k0", "cloud maximum of d times the sub-Laplacian of d, with doubling");
    k0->add_option("--n", k0_o.n, "cloud size")->capture_default_str();
    k0->add_option("--radius", k0_o.radius, "ball radius")->capture_default_str();
    k0->add_option("--step", k0_o.h, "second-difference step")->capture_default_str();
    k0->add_option("--exclude-axis", k0_o.exclude, "drop points this close to the axis")
        ->capture_default_str();
    k0->add_option("--stability-tol", k0_o.stability_tol,
                   "allowed relative change under cloud doubling")
        ->capture_default_str();
    cli::add_common(k0, k0_o.c);
    k0->callback([&]() { code = cli::run_estimate_k0(k0_o); });

    cli::BallVolumeOpts vol_o;
    CLI::App* vol = app.add_subcommand(
        "ball-volume", "Monte Carlo ball volumes and the log-log growth exponent");
    vol->add_option("--radii", vol_o.radii, "comma list of radii")->capture_default_str();
    vol->add_option("--n", vol_o.n, "samples per radius")->capture_default_str();
    vol->add_option("--slope-tol", vol_o.slope_tol, "allowed deviation of the slope from 4")
        ->capture_default_str();
    cli::add_common(vol, vol_o.c);
    vol->callback([&]() { code = cli::run_ball_volume(vol_o); });

    cli::SampleOpts sample_o;
    CLI::App* sample =
        app.add_subcommand("sample", "run one chain and write the per-sweep distance trace");
    sample->add_option("--model", sample_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    sample->add_option("--sweeps", sample_o.sweeps, "recorded sweeps")->capture_default_str();
    sample->add_option("--burn", sample_o.burn, "burn-in sweeps; 0 picks a pilot value")
        ->capture_default_str();
    sample->add_option("--schedule", sample_o.schedule, "site update order")
        ->check(CLI::IsMember({"sequential", "checkerboard"}))
        ->capture_default_str();
    sample->add_option("--scale", sample_o.scale, "proposal scale")->capture_default_str();
    sample->add_flag("--no-tune", sample_o.no_tune, "skip proposal-scale tuning");
    cli::add_common(sample, sample_o.c);
    sample->callback([&]() { code = cli::run_sample(sample_o); });

    cli::EstimateOpts est_o;
    CLI::App* est = app.add_subcommand(
        "estimate", "Monte Carlo means of the shipped functionals with error bars");
    est->add_option("--model", est_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    est->add_option("--sweeps", est_o.sweeps, "sweeps per chain")->capture_default_str();
    est->add_option("--burn", est_o.burn, "burn-in sweeps; 0 picks a pilot value")
        ->capture_default_str();
    est->add_option("--chains", est_o.chains, "independent chains")->capture_default_str();
    est->add_option("--schedule", est_o.schedule, "site update order")
        ->check(CLI::IsMember({"sequential", "checkerboard"}))
        ->capture_default_str();
    cli::add_common(est, est_o.c);
    est->callback([&]() { code = cli::run_estimate(est_o); });

    cli::ExpMomentOpts expm_o;
    CLI::App* expm = app.add_subcommand(
        "exp-moment", "exponential moment estimate with a heavy-tail diagnostic");
    expm->add_option("--model", expm_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    expm->add_option("--eps", expm_o.eps, "exponent coefficient")->capture_default_str();
    expm->add_option("--observable", expm_o.observable, "d (first site) or sum-d")
        ->check(CLI::IsMember({"d", "sum-d"}))
        ->capture_default_str();
    expm->add_option("--sweeps", expm_o.sweeps, "sweeps per chain")->capture_default_str();
    expm->add_option("--burn", expm_o.burn, "burn-in sweeps; 0 picks a pilot value")
        ->capture_default_str();
    expm->add_option("--chains", expm_o.chains, "independent chains")->capture_default_str();
    cli::add_common(expm, expm_o.c);
    expm->callback([&]() { code = cli::run_exp_moment(expm_o); });

    cli::UboundPointwiseOpts ubp_o;
    CLI::App* ubp = app.add_subcommand(
        "ubound-pointwise", "calibrate-then-verify pointwise energy bound on a wide cloud");
    ubp->add_option("--model", ubp_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    ubp->add_option("--n", ubp_o.n, "verification cloud size")->capture_default_str();
    ubp->add_option("--n-calibration", ubp_o.n_calibration, "calibration cloud size")
        ->capture_default_str();
    ubp->add_option("--x-radius", ubp_o.x_radius, "verification ball radius")
        ->capture_default_str();
    ubp->add_option("--calibration-radius", ubp_o.x_radius_calibration,
                    "calibration ball radius")
        ->capture_default_str();
    ubp->add_option("--omega-radius", ubp_o.omega_radius, "boundary distance range")
        ->capture_default_str();
    ubp->add_option("--margin", ubp_o.margin, "relative margin on the frozen constant")
        ->capture_default_str();
    cli::add_common(ubp, ubp_o.c);
    ubp->callback([&]() { code = cli::run_ubound_pointwise(ubp_o); });

    cli::UboundIntegralOpts ubi_o;
    CLI::App* ubi = app.add_subcommand(
        "ubound-integral", "grid search for (A1, B1) closing the weighted moment bound");
    ubi->add_option("--model", ubi_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    ubi->add_option("--boundaries", ubi_o.boundaries, "semicolon list of d(omega) pairs")
        ->capture_default_str();
    ubi->add_option("--weight", ubi_o.weight, "distance-power or hamiltonian")
        ->check(CLI::IsMember({"distance-power", "hamiltonian"}))
        ->capture_default_str();
    ubi->add_option("--a-grid", ubi_o.a_grid, "A1 candidates")->capture_default_str();
    ubi->add_option("--b-grid", ubi_o.b_grid, "B1 candidates")->capture_default_str();
    ubi->add_option("--sweeps", ubi_o.sweeps, "sweeps per boundary")->capture_default_str();
    ubi->add_option("--burn", ubi_o.burn, "burn-in sweeps")->capture_default_str();
    ubi->add_option("--chains", ubi_o.chains, "independent chains")->capture_default_str();
    cli::add_common(ubi, ubi_o.c);
    ubi->callback([&]() { code = cli::run_ubound_integral(ubi_o); });

    cli::ScanOpts ls_o;
    CLI::App* ls = app.add_subcommand(
        "ls-scan", "entropy over Dirichlet-form ratios across the shipped functionals");
    ls->add_option("--model", ls_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    ls->add_option("--q", ls_o.q, "exponent; 0 takes the model value")->capture_default_str();
    ls->add_option("--route", ls_o.route, "quadrature or mc")
        ->check(CLI::IsMember({"quadrature", "mc"}))
        ->capture_default_str();
    ls->add_option("--nodes", ls_o.nodes, "quadrature nodes per site")->capture_default_str();
    ls->add_option("--sweeps", ls_o.sweeps, "mc sweeps per chain")->capture_default_str();
    ls->add_option("--burn", ls_o.burn, "mc burn-in; 0 picks a pilot value")
        ->capture_default_str();
    ls->add_option("--chains", ls_o.chains, "mc chains")->capture_default_str();
    cli::add_common(ls, ls_o.c);
    ls->callback([&]() { code = cli::run_ratio_scan(ls_o, true); });

    cli::ScanOpts sg_o;
    CLI::App* sg = app.add_subcommand(
        "sg-scan", "variance over Dirichlet-form ratios across the shipped functionals");
    sg->add_option("--model", sg_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    sg->add_option("--q", sg_o.q, "exponent; 0 takes the model value")->capture_default_str();
    sg->add_option("--route", sg_o.route, "quadrature or mc")
        ->check(CLI::IsMember({"quadrature", "mc"}))
        ->capture_default_str();
    sg->add_option("--nodes", sg_o.nodes, "quadrature nodes per site")->capture_default_str();
    sg->add_option("--sweeps", sg_o.sweeps, "mc sweeps per chain")->capture_default_str();
    sg->add_option("--burn", sg_o.burn, "mc burn-in; 0 picks a pilot value")
        ->capture_default_str();
    sg->add_option("--chains", sg_o.chains, "mc chains")->capture_default_str();
    cli::add_common(sg, sg_o.c);
    sg->callback([&]() { code = cli::run_ratio_scan(sg_o, false); });

    cli::TelescopeOpts tel_o;
    CLI::App* tel = app.add_subcommand(
        "telescope-check", "two-block entropy decomposition identity on a small window");
    tel->add_option("--model", tel_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    tel->add_option("--q", tel_o.q, "exponent; 0 takes the model value")
        ->capture_default_str();
    tel->add_option("--tol", tel_o.tol, "allowed identity defect")->capture_default_str();
    tel->add_option("--nodes", tel_o.nodes, "quadrature nodes per site")
        ->capture_default_str();
    cli::add_common(tel, tel_o.c);
    tel->callback([&]() { code = cli::run_telescope_check(tel_o); });

    cli::BlockDynamicsOpts bd_o;
    CLI::App* bd = app.add_subcommand(
        "block-dynamics", "alternating-color sweep operator iterated to its fixed point");
    bd->add_option("--model", bd_o.model, "model file")->required()
        ->check(CLI::ExistingFile);
    bd->add_option("--nodes", bd_o.nodes, "quadrature nodes per site")->capture_default_str();
    bd->add_option("--n-max", bd_o.n_max, "iteration budget")->capture_default_str();
    bd->add_option("--tol", bd_o.tol, "required final residual, relative to the mean")
        ->capture_default_str();
    bd->add_option("--factor-site", bd_o.factor_site,
                   "site whose distance is the iterated function; default window start");
    cli::add_common(bd, bd_o.c);
    bd->callback([&]() { code = cli::run_block_dynamics(bd_o); });

    cli::CdProbeOpts cd_o;
    CLI::App* cd = app.add_subcommand(
        "cd-probe", "search for curvature-condition violations over the trial fields");
    cd->add_option("--rhos", cd_o.rhos, "comma list of curvature parameters")
        ->capture_default_str();
    cd->add_option("--step", cd_o.h, "difference step")->capture_default_str();
    cli::add_common(cd, cd_o.c);
    cd->callback([&]() { code = cli::run_cd_probe(cd_o); });

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return code;
}

}  // namespace heislab
