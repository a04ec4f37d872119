#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

#include "heislab/sampler.hpp"

using namespace heislab;

namespace {

ModelSpec ex1(double s, double J) {
    ModelSpec m;
    m.family = Family::ex1_diff;
    m.q = 2.0;
    m.p = 2.0;
    m.s = s;
    m.phase_coef = 1.0;
    m.J = J;
    return m;
}

ModelSpec ex2(double s, double J) {
    ModelSpec m;
    m.family = Family::ex2_sum;
    m.q = 2.0;
    m.p = 2.0;
    m.s = s;
    m.phase_coef = 1.0;
    m.J = J;
    return m;
}

ModelSpec ipq(double eps, double rho) {
    ModelSpec m;
    m.family = Family::ip_quadratic;
    m.q = 2.0;
    m.p = 2.0;
    m.phase_coef = 1.0;
    m.epsilon = eps;
    m.rho = rho;
    return m;
}

ModelSpec free_model(double p) {
    ModelSpec m;
    m.family = Family::free;
    m.q = 2.0;
    m.p = p;
    m.phase_coef = 1.0;
    return m;
}

LatticeConfig one_site_cfg() {
    LatticeConfig cfg;
    cfg.lo = cfg.hi = 0;
    cfg.spins = {planar_spin(1.0)};
    return cfg;
}

} // namespace

TEST(Determinism, SameSeedSameTrajectory) {
    const ModelSpec m = ex1(1.5, 0.1);
    const LatticeConfig cfg = make_config(0, 2, planar_spin(0.5), planar_spin(1.5));
    Chain a(cfg, m, 42), b(cfg, m, 42), c(cfg, m, 43);
    for (int s = 0; s < 200; ++s) {
        a.sweep(Schedule::sequential);
        b.sweep(Schedule::sequential);
        c.sweep(Schedule::sequential);
    }
    EXPECT_EQ(a.config().spins, b.config().spins);
    EXPECT_NE(a.config().spins, c.config().spins);
}

TEST(Metropolis, ZeroScaleAcceptsEverythingAndMovesNothing) {
    const ModelSpec m = free_model(2.0);
    LatticeConfig cfg = one_site_cfg();
    Chain chain(cfg, m, 7, 0.0);
    for (int s = 0; s < 100; ++s) chain.site_update(0);
    EXPECT_EQ(chain.config().spins[0], cfg.spins[0]);
    EXPECT_DOUBLE_EQ(chain.acceptance_rate(), 1.0);  // equal energies always accept
    EXPECT_EQ(chain.steps(), 100u);
}

TEST(Metropolis, SingleSiteMeanMatchesQuadrature) {
    const ModelSpec m = free_model(2.0);
    const LatticeConfig cfg = one_site_cfg();
    const double oracle = one_site_conditional_expectation(
        [](double r) { return r; }, cfg, m, 0);
    EXPECT_NEAR(oracle, 3.0 * std::sqrt(kPi) / 4.0, 1e-8);

    SamplerOptions opt;
    opt.n_sweeps = 1000000;
    opt.burn_in = 2000;
    const Estimate est = estimate_expectation(
        m, cfg, [](const LatticeConfig& c) { return cc_distance(c.site(0)); }, opt, 11);
    EXPECT_GT(est.stderr_, 0.0);
    EXPECT_NEAR(est.value, oracle, 3.0 * est.stderr_);
}

TEST(Estimate, ConstantObservable) {
    const Estimate est = estimate_expectation(
        free_model(2.0), one_site_cfg(), [](const LatticeConfig&) { return 4.5; },
        SamplerOptions{.n_sweeps = 5000, .burn_in = 10}, 3);
    EXPECT_DOUBLE_EQ(est.value, 4.5);
    EXPECT_DOUBLE_EQ(est.stderr_, 0.0);
    EXPECT_EQ(est.n_samples, 5000u);
}

TEST(Estimate, ThreeSiteRadialMatchesDenseQuadrature) {
    const ModelSpec m = ex1(1.5, 0.1);
    const LatticeConfig cfg = make_config(0, 2, GroupElement{0.5, -0.3, 0.2},
                                          GroupElement{-0.8, 0.1, -0.4});
    const WindowGrid grid(cfg, m, 40);
    const double oracle = grid.expectation([](const std::vector<double>& r) {
        return r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    });
    SamplerOptions opt;
    opt.n_sweeps = 150000;
    opt.burn_in = 3000;
    opt.n_chains = 2;
    const Estimate est = estimate_expectation(
        m, cfg,
        [](const LatticeConfig& c) {
            double s = 0.0;
            for (int i = c.lo; i <= c.hi; ++i) {
                const double d = cc_distance(c.site(i));
                s += d * d;
            }
            return s;
        },
        opt, 19);
    EXPECT_NEAR(est.value, oracle, 3.0 * est.stderr_ + 1e-6);
}

TEST(Estimate, ChainMergeIsThreadCountInvariant) {
    const ModelSpec m = ex2(1.0, 0.05);
    const LatticeConfig cfg = make_config(0, 1, planar_spin(0.5), planar_spin(1.0));
    const auto f = [](const LatticeConfig& c) { return cc_distance(c.site(0)); };
    SamplerOptions opt;
    opt.n_sweeps = 20000;
    opt.burn_in = 500;
    opt.n_chains = 3;
    opt.threads = 1;
    const Estimate serial = estimate_expectation(m, cfg, f, opt, 5);
    opt.threads = 3;
    const Estimate parallel = estimate_expectation(m, cfg, f, opt, 5);
    EXPECT_EQ(serial.value, parallel.value);
    EXPECT_EQ(serial.stderr_, parallel.stderr_);
}

TEST(Estimate, NonFiniteObservableAborts) {
    EXPECT_THROW(estimate_expectation(
                     free_model(2.0), one_site_cfg(),
                     [](const LatticeConfig&) { return std::nan(""); },
                     SamplerOptions{.n_sweeps = 100, .burn_in = 1}, 1),
                 std::runtime_error);
}

TEST(Schedule, OneSiteSequentialEqualsCheckerboard) {
    const ModelSpec m = free_model(2.0);
    Chain a(one_site_cfg(), m, 9), b(one_site_cfg(), m, 9);
    for (int s = 0; s < 300; ++s) {
        a.sweep(Schedule::sequential);
        b.sweep(Schedule::checkerboard);
    }
    EXPECT_EQ(a.config().spins, b.config().spins);
}

TEST(Schedule, CheckerboardUpdatesEachSiteOncePerSweep) {
    const ModelSpec m = ex1(1.5, 0.1);
    Chain chain(make_config(-2, 2, planar_spin(1.0), planar_spin(1.0)), m, 21);
    chain.sweep(Schedule::checkerboard);
    EXPECT_EQ(chain.steps(), 5u);
}

TEST(Schedule, SameColorSitesDoNotInfluenceConditionalUpdates) {
    // sites 0 and 2 share a color; with site 1 frozen, the conditional law
    // of site 0 must not depend on where site 2 sits
    const ModelSpec m = ex1(1.5, 0.1);
    const auto mean_d0_with_frozen_x2 = [&](double d2) {
        LatticeConfig cfg = make_config(0, 2, planar_spin(0.8), planar_spin(1.0));
        cfg.spins[1] = planar_spin(1.2);
        cfg.spins[2] = planar_spin(d2);
        Chain chain(cfg, m, 31);
        for (int s = 0; s < 2000; ++s) chain.site_update(0);  // burn
        std::vector<double> samples;
        for (int s = 0; s < 60000; ++s) {
            chain.site_update(0);
            samples.push_back(chain.site_distance(0));
        }
        const auto bm = detail::batch_means(samples, 50);
        double mean = 0.0;
        for (double x : bm) mean += x;
        mean /= static_cast<double>(bm.size());
        double var = 0.0;
        for (double x : bm) var += (x - mean) * (x - mean);
        var /= static_cast<double>(bm.size() - 1);
        return std::pair<double, double>(mean, std::sqrt(var / static_cast<double>(bm.size())));
    };
    const auto [m1, s1] = mean_d0_with_frozen_x2(0.5);
    const auto [m2, s2] = mean_d0_with_frozen_x2(3.0);
    EXPECT_NEAR(m1, m2, 4.0 * std::sqrt(s1 * s1 + s2 * s2));
}

TEST(AutoTune, AcceptanceLandsInTargetWindow) {
    ModelSpec mp;
    mp.family = Family::ip_power;
    mp.q = 1.25;
    mp.p = 5.0;
    mp.s = 3.0;
    mp.phase_coef = 1.0;
    mp.epsilon = 0.05;
    mp.rho = 0.5;
    for (const ModelSpec& m : {ex1(1.5, 0.1), ex2(1.0, 0.05), ipq(0.05, 0.5), mp,
                               free_model(2.0)}) {
        LatticeConfig cfg = make_config(0, 1, planar_spin(0.7), planar_spin(1.1));
        Chain chain(cfg, m, 77, 8.0);  // deliberately bad initial scale
        tune_proposal_scale(chain, Schedule::sequential);
        chain.reset_acceptance();
        for (int s = 0; s < 200; ++s) chain.sweep(Schedule::sequential);
        EXPECT_GE(chain.acceptance_rate(), 0.15) << family_name(m.family);
        EXPECT_LE(chain.acceptance_rate(), 0.55) << family_name(m.family);
    }
}

TEST(Autocorrelation, WhiteNoiseHasUnitTime) {
    Rng rng(123);
    std::vector<double> iid(20000);
    for (double& x : iid) x = rng.normal();
    const double tau = integrated_autocorrelation_time(iid);
    EXPECT_GT(tau, 0.7);
    EXPECT_LT(tau, 1.5);
}

TEST(DetailedBalance, TransitionFlowSymmetryOnHistogram) {
    // reversibility: in stationarity the flow a -> b matches b -> a; the
    // pair-symmetry statistic is approximately chi-square
    const ModelSpec m = free_model(2.0);
    Chain chain(one_site_cfg(), m, 99);
    tune_proposal_scale(chain, Schedule::sequential);
    for (int s = 0; s < 5000; ++s) chain.site_update(0);

    const std::vector<double> edges{0.4, 0.8, 1.2, 1.6, 2.0, 2.5};
    const auto bin_of = [&](double d) {
        std::size_t b = 0;
        while (b < edges.size() && d > edges[b]) ++b;
        return b;
    };
    const std::size_t nbins = edges.size() + 1;
    std::vector<std::vector<std::uint64_t>> count(nbins, std::vector<std::uint64_t>(nbins, 0));
    std::size_t prev = bin_of(chain.site_distance(0));
    for (int s = 0; s < 400000; ++s) {
        chain.site_update(0);
        const std::size_t cur = bin_of(chain.site_distance(0));
        ++count[prev][cur];
        prev = cur;
    }
    double stat = 0.0;
    int df = 0;
    for (std::size_t a = 0; a < nbins; ++a) {
        for (std::size_t b = a + 1; b < nbins; ++b) {
            const double nab = static_cast<double>(count[a][b]);
            const double nba = static_cast<double>(count[b][a]);
            if (nab + nba < 10.0) continue;
            stat += (nab - nba) * (nab - nba) / (nab + nba);
            ++df;
        }
    }
    ASSERT_GT(df, 0);
    const boost::math::chi_squared dist(df);
    const double threshold = boost::math::quantile(dist, 0.99);
    EXPECT_LT(stat, threshold) << "df = " << df;
}

TEST(ExpMoment, ZeroFunctionGivesExactlyOne) {
    const ExpMomentReport rep = exp_moment_estimate(
        free_model(2.0), one_site_cfg(), [](const LatticeConfig&) { return 0.0; }, 1.0,
        SamplerOptions{.n_sweeps = 5000, .burn_in = 10}, 4);
    EXPECT_DOUBLE_EQ(rep.est.value, 1.0);
    EXPECT_DOUBLE_EQ(rep.est.stderr_, 0.0);
    EXPECT_FALSE(rep.tail_warning);
    EXPECT_FALSE(rep.overflow);
}

TEST(ExpMoment, SmallExponentIsFiniteWithoutWarning) {
    // distance moment of the quadratic-interaction measure at small exponent
    const ModelSpec m = ipq(0.05, 0.5);
    const LatticeConfig cfg = make_config(0, 0, planar_spin(1.0), planar_spin(1.0));
    const ExpMomentReport rep = exp_moment_estimate(
        m, cfg, [](const LatticeConfig& c) { return cc_distance(c.site(0)); }, 0.05,
        SamplerOptions{.n_sweeps = 50000, .burn_in = 1000}, 8);
    EXPECT_TRUE(std::isfinite(rep.est.value));
    EXPECT_GT(rep.est.value, 1.0);
    EXPECT_FALSE(rep.tail_warning);
    EXPECT_FALSE(rep.overflow);
}

TEST(ExpMoment, StressedExponentTriggersTailDiagnostic) {
    // e^{5 d^2} against a phase that only grows like d^{1.9}: the average is
    // dominated by the largest few excursions and the diagnostic must say so
    const ModelSpec m = ex2(1.9, 0.05);
    const LatticeConfig cfg = make_config(0, 0, planar_spin(1.0), planar_spin(1.0));
    const ExpMomentReport rep = exp_moment_estimate(
        m, cfg,
        [](const LatticeConfig& c) {
            const double d = cc_distance(c.site(0));
            return d * d;
        },
        5.0, SamplerOptions{.n_sweeps = 50000, .burn_in = 1000}, 12);
    EXPECT_TRUE(rep.tail_warning);
}

TEST(ExpMoment, RejectsNonPositiveExponent) {
    EXPECT_THROW(exp_moment_estimate(free_model(2.0), one_site_cfg(),
                                     [](const LatticeConfig&) { return 0.0; }, 0.0,
                                     SamplerOptions{.n_sweeps = 100, .burn_in = 1}, 1),
                 std::invalid_argument);
}
