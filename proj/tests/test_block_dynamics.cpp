#include "heislab/block_dynamics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace {

using namespace heislab;

ModelSpec diff_model(double s, double J) {
    ModelSpec m;
    m.family = Family::ex1_diff;
    m.q = 2.0;
    m.s = s;
    m.J = J;
    m.phase_coef = 1.0;
    return m;
}

ModelSpec quad_model(double eps, double rho) {
    ModelSpec m;
    m.family = Family::ip_quadratic;
    m.q = 2.0;
    m.p = 2.0;
    m.epsilon = eps;
    m.rho = rho;
    m.phase_coef = 1.0;
    m.J = 0.5;
    return m;
}

std::function<double(double)> identity_factor() {
    return [](double r) { return r; };
}

TEST(Barycentric, NodeValuesAreReproducedExactly) {
    const QuadRule rule = gauss_legendre(12, 0.0, 2.0);
    const std::vector<double> w = bary_weights(rule);
    std::vector<double> vals;
    for (double x : rule.x) vals.push_back(std::sin(x));
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        EXPECT_EQ(bary_eval(rule, w, vals, rule.x[i]), vals[i]);
    }
}

TEST(Barycentric, SmoothFunctionIsAccurateBetweenNodes) {
    const QuadRule rule = gauss_legendre(12, 0.0, 2.0);
    const std::vector<double> w = bary_weights(rule);
    std::vector<double> vals;
    for (double x : rule.x) vals.push_back(std::sin(x));
    for (double x : {0.1, 0.7, 1.3, 1.95}) {
        EXPECT_NEAR(bary_eval(rule, w, vals, x), std::sin(x), 1e-8);
    }
}

TEST(Barycentric, CardinalCoefficientsArePartitionOfUnity) {
    const QuadRule rule = gauss_legendre(9, 0.0, 3.0);
    const std::vector<double> w = bary_weights(rule);
    const std::vector<double> c = bary_cardinal(rule, w, 1.234);
    double sum = 0.0;
    for (double v : c) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    // at a node the coefficients collapse to a Kronecker delta
    const std::vector<double> cn = bary_cardinal(rule, w, rule.x[4]);
    for (std::size_t i = 0; i < cn.size(); ++i) {
        EXPECT_EQ(cn[i], i == 4 ? 1.0 : 0.0);
    }
}

// ---- entropy telescoping --------------------------------------------------

TEST(Telescoping, ConstantFunctionHasNoEntropyAnywhere) {
    const ModelSpec m = diff_model(1.5, 0.02);
    const LatticeConfig cfg = make_config(0, 1, planar_spin(1.0), planar_spin(1.3));
    const RadialCylinder f{"two", [](const std::vector<double>&) { return 2.0; }, nullptr};
    const TelescopingReport rep = entropy_telescoping_check(m, cfg, f, 2.0);
    EXPECT_TRUE(rep.pass);
    EXPECT_NEAR(rep.lhs, 0.0, 1e-12);
    EXPECT_NEAR(rep.term_color0, 0.0, 1e-12);
    EXPECT_NEAR(rep.term_color1, 0.0, 1e-12);
    EXPECT_NEAR(rep.diff, 0.0, 1e-12);
}

TEST(Telescoping, TwoSiteDifferenceInteractionIsExact) {
    const ModelSpec m = diff_model(1.5, 0.02);
    const LatticeConfig cfg = make_config(0, 1, planar_spin(1.0), planar_spin(1.3));
    const RadialCylinder f{
        "1+d0", [](const std::vector<double>& r) { return 1.0 + r[0]; }, nullptr};
    const TelescopingReport rep = entropy_telescoping_check(m, cfg, f, 2.0);
    EXPECT_TRUE(rep.pass);
    EXPECT_GT(rep.lhs, 0.0);
    // both colors are nonempty here, so each block contributes entropy
    EXPECT_GT(rep.term_color0, 0.0);
    EXPECT_GT(rep.term_color1, 0.0);
    // the identity holds to roundoff, far below the reporting tolerance
    EXPECT_LE(rep.diff, 1e-12);
}

TEST(Telescoping, ThreeSiteQuadraticInteractionIsExact) {
    const ModelSpec m = quad_model(0.1, 0.5);
    const LatticeConfig cfg = make_config(0, 2, planar_spin(1.0), planar_spin(0.7));
    const RadialCylinder f{"mix",
                           [](const std::vector<double>& r) {
                               return 1.0 + r[0] * r[2] + 0.5 * r[1];
                           },
                           nullptr};
    for (double q : {1.5, 2.0}) {
        const TelescopingReport rep = entropy_telescoping_check(m, cfg, f, q);
        EXPECT_TRUE(rep.pass) << "q = " << q;
        EXPECT_GT(rep.lhs, 0.0);
        EXPECT_LE(rep.diff, 1e-12) << "q = " << q;
    }
}

TEST(Telescoping, InvalidInputsAreRejected) {
    const ModelSpec m = diff_model(1.5, 0.02);
    const RadialCylinder f{
        "1+d0", [](const std::vector<double>& r) { return 1.0 + r[0]; }, nullptr};
    // dense-grid route is capped at three sites
    const LatticeConfig wide = make_config(0, 3, planar_spin(1.0), planar_spin(1.0));
    EXPECT_THROW(entropy_telescoping_check(m, wide, f, 2.0), std::invalid_argument);
    // entropy needs a positive integrand
    const LatticeConfig cfg = make_config(0, 1, planar_spin(1.0), planar_spin(1.3));
    const RadialCylinder bad{
        "d0-5", [](const std::vector<double>& r) { return r[0] - 5.0; }, nullptr};
    EXPECT_THROW(entropy_telescoping_check(m, cfg, bad, 2.0), std::invalid_argument);
    // exponent outside (1, 2]
    EXPECT_THROW(entropy_telescoping_check(m, cfg, f, 2.5), std::invalid_argument);
}

// ---- block dynamics iteration ---------------------------------------------

TEST(BlockDynamics, ConstantProfileIsAFixedPoint) {
    const ModelSpec m = diff_model(1.5, 0.02);
    const LatticeConfig cfg = make_config(0, 4, planar_spin(1.0), planar_spin(1.3));
    BlockDynamicsParams prm;
    prm.n_nodes = 14;
    const BlockDynamicsRun run =
        block_dynamics_iterate(m, cfg, std::vector<std::function<double(double)>>(5), prm);
    EXPECT_EQ(run.target, 1.0);
    ASSERT_GE(run.residuals.size(), 2u);
    EXPECT_LE(run.residuals[0], 1e-14);
    EXPECT_LE(run.residuals[1], 1e-13);
    for (double v : run.final_values) EXPECT_NEAR(v, 1.0, 1e-13);
}

TEST(BlockDynamics, FreeModelReachesItsMeanInOneSweep) {
    ModelSpec m;
    m.family = Family::free;
    m.p = 2.0;
    m.phase_coef = 1.0;
    const LatticeConfig cfg = make_config(0, 4, planar_spin(1.0), planar_spin(1.0));
    std::vector<std::function<double(double)>> fac(5);
    fac[0] = identity_factor();                       // even color
    fac[1] = [](double r) { return r * r; };          // odd color
    BlockDynamicsParams prm;
    prm.n_nodes = 18;
    const BlockDynamicsRun run = block_dynamics_iterate(m, cfg, fac, prm);
    // without bonds one full sweep lands on the product of one-site means
    ASSERT_GE(run.residuals.size(), 2u);
    EXPECT_LE(run.residuals[1], 1e-12);
    // target is the grid mean; it should sit near Gamma(5/2) * Gamma(3)
    const double exact = std::tgamma(2.5) * std::tgamma(3.0);
    EXPECT_NEAR(run.target, exact, 1e-4);
}

TEST(BlockDynamics, WeakCouplingConvergesFastWithCleanRefinement) {
    const ModelSpec m = diff_model(1.5, 0.02);
    const LatticeConfig cfg = make_config(0, 4, planar_spin(1.0), planar_spin(1.3));
    std::vector<std::function<double(double)>> fac(5);
    fac[0] = identity_factor();
    BlockDynamicsParams prm;
    prm.n_nodes = 18;
    const BlockDynamicsRun run = block_dynamics_iterate(m, cfg, fac, prm);
    EXPECT_LE(run.iterations_done, 10);
    EXPECT_LE(run.residuals.back(), 1e-12);
    ASSERT_GE(run.residuals.size(), 3u);
    EXPECT_LE(run.residuals[1], 0.05);
    EXPECT_LE(run.residuals[2], 1e-4);
    EXPECT_TRUE(run.richardson_ok);
    EXPECT_LE(run.target_refined_diff, 1e-6 * std::max(1.0, std::abs(run.target)));
    // positive factors stay positive through the conditional averages
    for (double v : run.final_values) EXPECT_GT(v, 0.0);
}

TEST(BlockDynamics, StrongerCouplingDecaysGeometrically) {
    const ModelSpec m = diff_model(1.5, 0.25);
    const LatticeConfig cfg = make_config(0, 4, planar_spin(1.0), planar_spin(1.3));
    std::vector<std::function<double(double)>> fac(5);
    fac[0] = identity_factor();
    BlockDynamicsParams prm;
    prm.n_nodes = 18;
    const BlockDynamicsRun run = block_dynamics_iterate(m, cfg, fac, prm);
    EXPECT_LE(run.residuals.back(), 1e-12);
    // contraction ratios stabilise once the transient has passed
    std::vector<double> ratios;
    for (std::size_t n = 3; n + 1 < run.residuals.size(); ++n) {
        if (run.residuals[n + 1] > 1e-12) {
            ratios.push_back(run.residuals[n + 1] / run.residuals[n]);
        }
    }
    ASSERT_GE(ratios.size(), 5u);
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    EXPECT_LT(*hi, 0.2);
    EXPECT_LE(*hi / *lo, 1.5);
}

TEST(BlockDynamics, RefinementCatchesCoarseGridsAndPassesFineOnes) {
    const ModelSpec m = diff_model(1.5, 0.25);
    const LatticeConfig cfg = make_config(0, 4, planar_spin(1.0), planar_spin(1.3));
    std::vector<std::function<double(double)>> fac(5);
    fac[0] = identity_factor();
    BlockDynamicsParams coarse;
    coarse.n_nodes = 18;
    const BlockDynamicsRun bad = block_dynamics_iterate(m, cfg, fac, coarse);
    EXPECT_FALSE(bad.richardson_ok);
    BlockDynamicsParams fine;
    fine.n_nodes = 26;
    const BlockDynamicsRun good = block_dynamics_iterate(m, cfg, fac, fine);
    EXPECT_TRUE(good.richardson_ok);
    // both grids agree on the mean itself well before the probe tolerance
    EXPECT_NEAR(bad.target, good.target, 1e-3);
}

TEST(BlockDynamics, InvalidInputsAreRejected) {
    const ModelSpec m = diff_model(1.5, 0.02);
    const LatticeConfig cfg = make_config(0, 4, planar_spin(1.0), planar_spin(1.3));
    BlockDynamicsParams prm;
    prm.n_nodes = 8;
    // factor list must match the window
    EXPECT_THROW(
        block_dynamics_iterate(m, cfg, std::vector<std::function<double(double)>>(3), prm),
        std::invalid_argument);
    // window larger than the grid product budget
    const LatticeConfig wide = make_config(0, 7, planar_spin(1.0), planar_spin(1.0));
    EXPECT_THROW(
        block_dynamics_iterate(m, wide, std::vector<std::function<double(double)>>(8), prm),
        std::invalid_argument);
    // interacting model needs boundary spins
    LatticeConfig open;
    open.lo = 0;
    open.hi = 2;
    open.spins.assign(3, identity());
    EXPECT_THROW(
        block_dynamics_iterate(m, open, std::vector<std::function<double(double)>>(3), prm),
        std::invalid_argument);
    // iteration budget must be positive
    BlockDynamicsParams zero = prm;
    zero.n_max = 0;
    EXPECT_THROW(
        block_dynamics_iterate(m, cfg, std::vector<std::function<double(double)>>(5), zero),
        std::invalid_argument);
}

}  // namespace
