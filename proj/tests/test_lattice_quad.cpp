#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "heislab/lattice_quad.hpp"

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

ModelSpec ipp() {
    ModelSpec m;
    m.family = Family::ip_power;
    m.q = 1.25;
    m.p = 5.0;
    m.s = 3.0;
    m.phase_coef = 1.0;
    m.epsilon = 0.05;
    m.rho = 0.5;
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

LatticeConfig one_site_cfg(double d_left, double d_right) {
    return make_config(0, 0, planar_spin(d_left), planar_spin(d_right));
}

} // namespace

TEST(OneSite, ConstantIsOne) {
    const auto cfg = one_site_cfg(1.0, 2.0);
    const double v = one_site_conditional_expectation([](double) { return 1.0; }, cfg,
                                                      ex1(1.5, 0.1), 0);
    EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(OneSite, GammaFunctionClosedForm) {
    // free phase r^2: E[d] = Gamma(5/2) / Gamma(2) = 3 sqrt(pi) / 4
    LatticeConfig cfg;
    cfg.lo = cfg.hi = 0;
    cfg.spins = {identity()};
    const double v = one_site_conditional_expectation([](double r) { return r; }, cfg,
                                                      free_model(2.0), 0);
    EXPECT_NEAR(v, 3.0 * std::sqrt(kPi) / 4.0, 1e-8);
    // second moment: E[d^2] = Gamma(3) / Gamma(2) = 2
    const double v2 = one_site_conditional_expectation([](double r) { return r * r; }, cfg,
                                                       free_model(2.0), 0);
    EXPECT_NEAR(v2, 2.0, 1e-8);
}

TEST(OneSite, AdaptiveMatchesDenseGrid) {
    for (const ModelSpec& m : {ex1(1.5, 0.1), ex2(1.0, 0.05), ipq(0.05, 0.5), ipp()}) {
        const auto cfg = one_site_cfg(0.7, 1.6);
        const double adaptive = one_site_conditional_expectation(
            [](double r) { return r * r; }, cfg, m, 0);
        const WindowGrid grid(cfg, m, 64);
        const double dense = grid.expectation(
            [](const std::vector<double>& r) { return r[0] * r[0]; });
        EXPECT_NEAR(adaptive, dense, 1e-7 * std::max(1.0, std::abs(dense)))
            << family_name(m.family);
    }
}

TEST(OneSite, RaisingBoundaryDistanceLowersMeanForAttractiveQuadratic) {
    // recorded direction: with eps, rho > 0 the cross term penalizes large
    // d(x) harder when the neighbors sit farther out
    const ModelSpec m = ipq(0.05, 0.5);
    const auto mean_d = [&](double dv) {
        return one_site_conditional_expectation([](double r) { return r; },
                                                one_site_cfg(dv, dv), m, 0);
    };
    EXPECT_LT(mean_d(2.0), mean_d(0.5));
}

TEST(OneSite, MissingBoundaryIsStructuralError) {
    LatticeConfig cfg;
    cfg.lo = cfg.hi = 0;
    cfg.spins = {identity()};
    cfg.left_boundary = planar_spin(1.0);
    EXPECT_THROW(one_site_conditional_expectation([](double) { return 1.0; }, cfg,
                                                  ex1(1.5, 0.1), 0),
                 std::out_of_range);
}

TEST(WindowGrid, DenseAndTransferRoutesAgree) {
    for (const ModelSpec& m : {ex1(1.5, 0.1), ex2(1.0, 0.05), ipq(0.05, 0.5), ipp()}) {
        LatticeConfig cfg = make_config(0, 2, GroupElement{0.5, -0.3, 0.2},
                                        GroupElement{-0.8, 0.1, -0.4});
        const WindowGrid grid(cfg, m, 32);
        const auto fd = [](double r) { return r; };
        const auto fsq = [](double r) { return r * r; };
        // single-site mean at each site
        for (int i = 0; i < 3; ++i) {
            const double dense = grid.expectation([&](const std::vector<double>& r) {
                return r[static_cast<std::size_t>(i)];
            });
            const double transfer = grid.transfer_site_expectation(i, fd);
            EXPECT_NEAR(dense, transfer, 1e-11 * std::max(1.0, std::abs(dense)))
                << family_name(m.family) << " site " << i;
        }
        // a full product observable
        const double dense = grid.expectation([&](const std::vector<double>& r) {
            return r[0] * r[1] * r[1] * r[2];
        });
        const double transfer = grid.transfer_expectation({fd, fsq, fd});
        EXPECT_NEAR(dense, transfer, 1e-11 * std::max(1.0, std::abs(dense)))
            << family_name(m.family);
    }
}

TEST(WindowGrid, RejectsMalformedRequests) {
    const ModelSpec m = ex1(1.5, 0.1);
    LatticeConfig no_bound;
    no_bound.lo = 0;
    no_bound.hi = 0;
    no_bound.spins = {identity()};
    EXPECT_THROW(WindowGrid(no_bound, m, 16), std::invalid_argument);

    LatticeConfig big = make_config(0, 3, planar_spin(1.0), planar_spin(1.0));
    const WindowGrid grid(big, m, 8);
    EXPECT_THROW(grid.expectation([](const std::vector<double>&) { return 1.0; }),
                 std::invalid_argument);
    // transfer route still works beyond 3 sites
    EXPECT_NEAR(grid.transfer_expectation(
                    std::vector<std::function<double(double)>>(4)),
                1.0, 1e-12);
}

TEST(Dlr, ConditioningOnSubWindowChangesNothing) {
    const auto f_first = [](const std::vector<double>& r) { return r[0]; };
    const auto f_sumsq = [](const std::vector<double>& r) {
        double s = 0.0;
        for (double x : r) s += x * x;
        return s;
    };
    const auto f_exp = [](const std::vector<double>& r) { return std::exp(-r[0]); };
    const GroupElement wl{0.5, -0.3, 0.2}, wr{-0.8, 0.1, -0.4};
    for (const ModelSpec& m : {ex1(1.5, 0.1), ex2(1.0, 0.05), ipq(0.05, 0.5), ipp()}) {
        struct Triple { int lo, hi, mlo, mhi; };
        for (const Triple& t : {Triple{0, 1, 0, 0}, Triple{0, 2, 1, 1}, Triple{0, 2, 0, 1},
                                Triple{0, 2, 1, 2}}) {
            const LatticeConfig cfg = make_config(t.lo, t.hi, wl, wr);
            for (const auto& f : {std::function<double(const std::vector<double>&)>(f_first),
                                  std::function<double(const std::vector<double>&)>(f_sumsq),
                                  std::function<double(const std::vector<double>&)>(f_exp)}) {
                const DlrReport rep = dlr_check(m, cfg, t.mlo, t.mhi, f, 1e-6, 16);
                EXPECT_TRUE(rep.pass)
                    << family_name(m.family) << " window [" << t.lo << "," << t.hi
                    << "] sub [" << t.mlo << "," << t.mhi << "] diff " << rep.diff;
                EXPECT_LE(rep.diff, 1e-10);  // identity is exact on the shared grid
            }
        }
    }
}

TEST(Dlr, FullSubWindowIsTheIdentity) {
    const LatticeConfig cfg = make_config(0, 1, planar_spin(0.6), planar_spin(1.2));
    const DlrReport rep = dlr_check(ex1(1.5, 0.1), cfg, 0, 1,
                                    [](const std::vector<double>& r) { return r[0] * r[1]; },
                                    1e-6, 16);
    EXPECT_TRUE(rep.pass);
    EXPECT_LE(rep.diff, 1e-12);
}

TEST(Dlr, ConstantFunctionIsExact) {
    const LatticeConfig cfg = make_config(0, 2, planar_spin(0.6), planar_spin(1.2));
    const DlrReport rep = dlr_check(ex2(1.0, 0.05), cfg, 1, 1,
                                    [](const std::vector<double>&) { return 7.25; }, 1e-6, 12);
    EXPECT_NEAR(rep.lhs, 7.25, 1e-12);
    EXPECT_NEAR(rep.rhs, 7.25, 1e-12);
}

TEST(Dlr, RejectsSubWindowOutsideWindow) {
    const LatticeConfig cfg = make_config(0, 1, planar_spin(1.0), planar_spin(1.0));
    EXPECT_THROW(dlr_check(ex1(1.5, 0.1), cfg, 1, 2,
                           [](const std::vector<double>&) { return 1.0; }),
                 std::invalid_argument);
}

TEST(Hstar, BoundsAreFiniteAndPositiveForSmallBall) {
    const HstarReport rep = hstar_diagnostic(ex1(1.5, 0.1), 1.0);
    EXPECT_GT(rep.min_two_site_integral, 0.0);
    EXPECT_TRUE(std::isfinite(rep.integral_bound));
    EXPECT_GT(rep.integral_bound, 0.0);
    EXPECT_TRUE(std::isfinite(rep.pointwise_bound));
    EXPECT_GE(rep.pointwise_bound, 1.0);  // H >= 0 somewhere on the grid
}

TEST(Hstar, BoundsGrowWithBallRadiusForSumFamily) {
    // the integral bound is U-shaped in L: the window integral vanishes as
    // L -> 0 (tiny domain) and again as L -> infinity (worst-case boundary
    // penalty J (r + L)^p), so growth is asserted on the large-L branch
    const ModelSpec m = ex2(1.0, 0.1);
    const HstarReport r2 = hstar_diagnostic(m, 2.0);
    const HstarReport r3 = hstar_diagnostic(m, 3.0);
    const HstarReport r4 = hstar_diagnostic(m, 4.0);
    EXPECT_LT(r2.integral_bound, r3.integral_bound);
    EXPECT_LT(r3.integral_bound, r4.integral_bound);
    EXPECT_LT(r2.pointwise_bound, r3.pointwise_bound);
    EXPECT_LT(r3.pointwise_bound, r4.pointwise_bound);
    // small-L divergence of the integral bound
    EXPECT_GT(hstar_diagnostic(m, 0.25).integral_bound, r2.integral_bound);
}

TEST(Hstar, RejectsDegenerateRadius) {
    EXPECT_THROW(hstar_diagnostic(ex1(1.5, 0.1), 0.0), std::invalid_argument);
    EXPECT_THROW(hstar_diagnostic(ex1(1.5, 0.1), -1.0), std::invalid_argument);
}
