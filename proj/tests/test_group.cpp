#include <gtest/gtest.h>

#include <cmath>

#include "heislab/group.hpp"
#include "heislab/util.hpp"
#include "oracles.hpp"

using namespace heislab;

namespace {

GroupElement random_elem(Rng& rng, double scale = 2.0) {
    return {rng.uniform(-scale, scale), rng.uniform(-scale, scale),
            rng.uniform(-scale * scale, scale * scale)};
}

double rel_diff(double a, double b) {
    const double m = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) / m;
}

} // namespace

TEST(Group, ProductExample) {
    const GroupElement p = mul({1, 0, 0}, {0, 1, 0});
    EXPECT_DOUBLE_EQ(p.x1, 1.0);
    EXPECT_DOUBLE_EQ(p.x2, 1.0);
    EXPECT_DOUBLE_EQ(p.x3, 0.5);
    const GroupElement q = mul({0, 1, 0}, {1, 0, 0});
    EXPECT_DOUBLE_EQ(q.x3, -0.5);
}

TEST(Group, Associativity) {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const GroupElement a = random_elem(rng), b = random_elem(rng), c = random_elem(rng);
        const GroupElement lhs = mul(mul(a, b), c);
        const GroupElement rhs = mul(a, mul(b, c));
        EXPECT_LT(rel_diff(lhs.x1, rhs.x1), 1e-12);
        EXPECT_LT(rel_diff(lhs.x2, rhs.x2), 1e-12);
        EXPECT_LT(rel_diff(lhs.x3, rhs.x3), 1e-12);
    }
}

TEST(Group, IdentityAndInverse) {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const GroupElement a = random_elem(rng);
        const GroupElement e = mul(a, inverse(a));
        EXPECT_EQ(e.x1, 0.0);
        EXPECT_EQ(e.x2, 0.0);
        EXPECT_EQ(e.x3, 0.0);
        const GroupElement b = mul(identity(), a);
        EXPECT_EQ(b, a);
    }
}

TEST(Group, DilationIsAutomorphism) {
    Rng rng(13);
    for (int i = 0; i < 500; ++i) {
        const GroupElement a = random_elem(rng), b = random_elem(rng);
        const double l = rng.uniform(0.1, 3.0);
        const GroupElement lhs = dilate(mul(a, b), l);
        const GroupElement rhs = mul(dilate(a, l), dilate(b, l));
        EXPECT_LT(rel_diff(lhs.x1, rhs.x1), 1e-12);
        EXPECT_LT(rel_diff(lhs.x2, rhs.x2), 1e-12);
        EXPECT_LT(rel_diff(lhs.x3, rhs.x3), 1e-12);
    }
}

TEST(Derivatives, CoordinateFields) {
    const ScalarField f1{[](const GroupElement& a) { return a.x1; }};
    const GroupElement p{0.3, -0.7, 0.2};
    EXPECT_NEAR(horizontal_derivative(f1, p, 1), 1.0, 1e-10);
    EXPECT_NEAR(horizontal_derivative(f1, p, 2), 0.0, 1e-10);
}

TEST(Derivatives, MatchesAnalyticFrameOnSmoothField) {
    auto raw = [](GroupElement a) { return std::sin(a.x1) * std::exp(0.3 * a.x3) + a.x2 * a.x2; };
    const ScalarField f{raw};
    Rng rng(21);
    for (int i = 0; i < 50; ++i) {
        const GroupElement p = random_elem(rng, 1.0);
        EXPECT_NEAR(horizontal_derivative(f, p, 1), oracle::x1_field_analytic(raw, p), 5e-7);
        EXPECT_NEAR(horizontal_derivative(f, p, 2), oracle::x2_field_analytic(raw, p), 5e-7);
    }
}

TEST(Derivatives, SubLaplacianMatchesNestedFirstDerivatives) {
    const ScalarField f{[](const GroupElement& a) {
        return a.x1 * a.x1 * a.x3 + 0.5 * a.x2 * a.x2 * a.x1 + a.x3 * a.x3;
    }};
    Rng rng(22);
    for (int i = 0; i < 30; ++i) {
        const GroupElement p = random_elem(rng, 1.0);
        // nested first-difference route at the second-order step
        const double hn = kSecondOrderStep;
        const ScalarField d1{[&f](const GroupElement& a) { return horizontal_derivative(f, a, 1, kSecondOrderStep); }};
        const ScalarField d2{[&f](const GroupElement& a) { return horizontal_derivative(f, a, 2, kSecondOrderStep); }};
        const double nested = horizontal_derivative(d1, p, 1, hn) + horizontal_derivative(d2, p, 2, hn);
        EXPECT_NEAR(sub_laplacian(f, p), nested, 1e-6);
    }
}

TEST(Gamma, VerticalCoordinate) {
    // f = x3: X1 f = -x2/2, X2 f = x1/2, so Gamma = (x1^2 + x2^2)/4
    const ScalarField f{[](const GroupElement& a) { return a.x3; }};
    Rng rng(23);
    for (int i = 0; i < 50; ++i) {
        const GroupElement p = random_elem(rng, 2.0);
        EXPECT_NEAR(gamma(f, p), 0.25 * (p.x1 * p.x1 + p.x2 * p.x2), 1e-8);
    }
}

TEST(Gamma2, VerticalCoordinateHandExpansion) {
    // Hand expansion for f = x3: every second-order term vanishes except
    // (Zf)^2/2 = 1/2, at every point.
    const ScalarField f{[](const GroupElement& a) { return a.x3; }};
    Rng rng(24);
    for (int i = 0; i < 20; ++i) {
        const GroupElement p = random_elem(rng, 1.5);
        EXPECT_NEAR(gamma2(f, p), 0.5, 1e-7);
    }
}

TEST(Gamma2, MatchesDefinitionRoute) {
    // Gamma2 = (Delta Gamma(f,f) - 2 <grad f, grad Delta f>)/2, all numeric.
    auto check = [](const ScalarField& f, const GroupElement& p, double tol) {
        const ScalarField gam{[&f](const GroupElement& a) { return gamma(f, a, 1e-6); }};
        const ScalarField lap{[&f](const GroupElement& a) { return sub_laplacian(f, a, 1e-4); }};
        const double big_h = 1e-2;
        const double lhs = gamma2(f, p);
        const HorizontalVector gf = sub_gradient(f, p);
        const HorizontalVector gl = sub_gradient(lap, p, big_h);
        const double rhs = 0.5 * (sub_laplacian(gam, p, big_h) - 2.0 * (gf.v1 * gl.v1 + gf.v2 * gl.v2));
        EXPECT_NEAR(lhs, rhs, tol);
    };
    const ScalarField fa{[](const GroupElement& a) { return a.x1 * a.x1 + a.x2 * a.x3; }};
    const ScalarField fb{[](const GroupElement& a) { return a.x1 * a.x2 * a.x3; }};
    check(fa, {0.4, -0.3, 0.2}, 2e-4);
    check(fb, {-0.2, 0.5, 0.1}, 2e-4);
}

TEST(Gamma2, QuadraticWitnessValue) {
    // f = x1 + M x2 x3 at the identity: Gamma = 1, Gamma2 = -2M.
    for (double M : {1.0, 1e3}) {
        const ScalarField f{[M](const GroupElement& a) { return a.x1 + M * a.x2 * a.x3; }};
        EXPECT_NEAR(gamma(f, identity()), 1.0, 1e-8);
        EXPECT_NEAR(gamma2(f, identity()), -2.0 * M, 1e-5 * std::max(1.0, M));
    }
}

TEST(CdProbe, BenignFamilyStaysNonnegative) {
    std::vector<ScalarField> trials;
    trials.push_back({[](const GroupElement& a) { return a.x1; }});
    const auto w = cd_condition_probe(trials, default_cd_points(), 0.0);
    EXPECT_GE(w.min_value, -1e-8);
    EXPECT_FALSE(w.negative);
}

TEST(CdProbe, ShippedFamilyDefeatsEveryRho) {
    const auto trials = default_cd_trials();
    const auto points = default_cd_points();
    for (double rho : {-1e6, 0.0, 1e6}) {
        const auto w = cd_condition_probe(trials, points, rho);
        EXPECT_TRUE(w.negative) << "rho=" << rho << " min=" << w.min_value;
    }
}

TEST(AxisGuard, RefusesDerivativeOnAxisForNonSmoothField) {
    const ScalarField f{[](const GroupElement& a) { return std::abs(a.x1) + a.x3; },
                        Smoothness::smooth_off_axis};
    EXPECT_THROW(sub_gradient(f, {0.0, 0.0, 1.0}), std::domain_error);
    EXPECT_NO_THROW(sub_gradient(f, {0.5, 0.0, 1.0}));
}

TEST(HorizontalVectorNorms, QNormAccessor) {
    const HorizontalVector v{3.0, 4.0};
    EXPECT_DOUBLE_EQ(v.norm2(), 5.0);
    EXPECT_DOUBLE_EQ(v.norm_q(2.0), 5.0);
    EXPECT_NEAR(v.norm_q(1.5), std::pow(std::pow(3.0, 1.5) + std::pow(4.0, 1.5), 1.0 / 1.5), 1e-12);
    EXPECT_GE(v.norm_q(1.5), v.norm2());
}
