#include <hdexp/expfamily.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace hdexp;

TEST(ExpParameter, AcceptsInteriorParameters) {
    auto p = ExpParameter::make(0.18);
    EXPECT_LT(p.multiplier, 1.0);
    EXPECT_NEAR(std::abs(p.eta * std::exp(p.fixed_point) - p.fixed_point), 0.0, 1e-12);
    EXPECT_NO_THROW(ExpParameter::make(cplx(0.2, 0.009)));
}

TEST(ExpParameter, RejectsOutsideRegion) {
    EXPECT_THROW(ExpParameter::make(0.5), DomainError);
    EXPECT_THROW(ExpParameter::make(0.05), DomainError);
    EXPECT_THROW(ExpParameter::make(cplx(0.18, 0.05)), DomainError);
    EXPECT_THROW(ExpParameter::make(1.0 / (6.0 * std::numbers::e)), DomainError);
}

TEST(Potential, RejectsDivergentExponents) {
    EXPECT_THROW(Potential::make(1.0, 0.9), DomainError);
    EXPECT_THROW(Potential::make(1.05, 0.9), DomainError);  // t tau < 1
    EXPECT_THROW(Potential::make(1.5, 1.0), DomainError);
    EXPECT_NO_THROW(Potential::make(1.5, 0.9));
}

TEST(Preimages, MapBackOntoW) {
    auto p = ExpParameter::make(cplx(0.17, 0.004));
    cplx w(3.0, -2.0);
    auto zs = preimages(p, w, 5);
    ASSERT_EQ(zs.size(), 11u);
    for (cplx z : zs) {
        EXPECT_NEAR(std::abs(p.eta * std::exp(z) - w), 0.0, 1e-13);
        EXPECT_GT(z.real(), 1.0);
    }
    EXPECT_NEAR(zs[6].imag() - zs[5].imag(), kTwoPi, 1e-12);
}

TEST(Preimages, RejectsPointsTooCloseToTheOrigin) {
    auto p = ExpParameter::make(0.18);
    EXPECT_THROW(preimages(p, 0.4, 1), DomainError);
    EXPECT_THROW(preimages(p, 0.0, 1), DomainError);
    EXPECT_THROW(preimages(p, 2.0, -1), DomainError);
}

// independent high-precision value of |w|^{-t} ((1+|z|^2)/(1+|w|^2))^{-t tau/2}
TEST(Weight, GoldenValue) {
    auto pot = Potential::make(1.5, 0.9);
    EXPECT_NEAR(weight(pot, std::log(10.0), 2.0), 0.30242422739471859023, 1e-15);
}

TEST(Weight, SymmetricInBranchForRealData) {
    auto p = ExpParameter::make(0.18);
    auto pot = Potential::make(1.7, 0.8);
    for (double w : {0.6, 2.0, 7.5, 40.0}) {
        auto zs = preimages(p, w, 9);
        for (int k = 1; k <= 9; ++k) EXPECT_EQ(weight(pot, zs[9 + k], w), weight(pot, zs[9 - k], w));
    }
}

TEST(TailIntegral, MatchesClosedForms) {
    // s = 1: J(y) = pi/2 - atan(y)
    for (double y : {-3.0, 0.0, 0.5, 10.0, 1e4})
        EXPECT_NEAR(detail::tail_integral(1.0, y), std::numbers::pi / 2 - std::atan(y), 1e-13);
    // s = 3/2: J(y) = 1 - y / sqrt(1+y^2)
    for (double y : {-2.0, 0.0, 1.0, 30.0})
        EXPECT_NEAR(detail::tail_integral(1.5, y), 1.0 - y / std::sqrt(1.0 + y * y), 1e-13);
}

// reference orders from the incomplete beta at 40 digits
TEST(TruncationOrder, GoldenOrders) {
    EXPECT_EQ(truncation_order(ExpParameter::make(0.2), Potential::make(2.0, 0.9), cplx(3, 1), 1e-6), 18192408u);
    EXPECT_EQ(truncation_order(ExpParameter::make(0.15), Potential::make(3.0, 0.9), 6.0, 1e-10), 381060u);
    EXPECT_EQ(truncation_order(ExpParameter::make(0.18), Potential::make(1.5, 0.9), 2.0, 1e-2), 2533214u);
    double big = truncation_order_real(ExpParameter::make(0.18), Potential::make(1.5, 0.9), 2.0, 1e-8);
    EXPECT_NEAR(big / 351988868385864899351929.0, 1.0, 1e-12);
    double huge = truncation_order_real(ExpParameter::make(0.18), Potential::make(1.2, 0.95), 2.0, 1e-3);
    EXPECT_NEAR(huge / 369351182046999568649383382.0, 1.0, 1e-12);
}

TEST(TruncationOrder, SaturatesWithoutOverflow) {
    auto p = ExpParameter::make(0.18);
    auto pot = Potential::make(1.2, 0.85);  // t tau = 1.02: tail decays like K^{-0.02}
    double K = truncation_order_real(p, pot, 2.0, 1e-8);
    EXPECT_TRUE(std::isinf(K) || K > 1e300);
    EXPECT_THROW(truncation_order(p, pot, 2.0, 1e-8), ComputationError);
    EXPECT_THROW(truncation_order(p, Potential::make(1.5, 0.9), 2.0, 0.0), DomainError);
}

// Sum the branches beyond K up to |k| = 1e6 and add an upper estimate of
// the rest: the remainder past M is at most the integral from M - 1/2
// because |z_k|^2 is convex in k.
TEST(TruncationOrder, BoundCoversBruteForceTail) {
    CounterRng rng(2024, 5);
    const long M = 1000000;
    int checked = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        double t = 1.3 + 1.5 * rng.uniform(5 * i);
        double tau = std::clamp(1.15 / t + 0.25 * rng.uniform(5 * i + 1), 0.5, 0.99);
        auto pot = Potential::make(t, tau);
        auto p = ExpParameter::make(cplx(0.13 + 0.1 * rng.uniform(5 * i + 2), 0.0));
        cplx w(1.0 + 8.0 * rng.uniform(5 * i + 3), 60.0 * (rng.uniform(5 * i + 4) - 0.5));
        if (std::abs(w) <= std::numbers::e * std::abs(p.eta)) continue;
        double eps = 0.3;
        double K = truncation_order_real(p, pot, w, eps);
        if (K >= M / 2) continue;
        const double s = 0.5 * tau * t;
        cplx base = std::log(w / p.eta);
        auto term = [&](long k) { return std::pow(1.0 + std::norm(base + cplx(0.0, kTwoPi * k)), -s); };
        double tail = 0.0;
        for (long k = static_cast<long>(K) + 1; k <= M; ++k) tail += term(k) + term(-k);
        // beyond M, |z_k| >= 2 pi |k| - |Im base| - ...; bound each side by the integral
        double y = kTwoPi * (M + 0.5) - std::abs(base.imag());
        tail += 2.0 * detail::tail_integral(s, y) / kTwoPi;
        double claimed = detail::relative_tail_bound(s, K, std::abs(base)) * term(0);
        EXPECT_LE(tail, claimed) << "t=" << t << " tau=" << tau << " w=" << w;
        EXPECT_LT(tail, eps * term(0) * (1 + 1e-12));
        ++checked;
    }
    EXPECT_GT(checked, 60);
}

TEST(HalfPlaneDomain, ValidatesGeometry) {
    EXPECT_THROW(HalfPlaneDomain::make(9.0, 257.6, 0.3, 0.25), DomainError);
    EXPECT_THROW(HalfPlaneDomain::make(3.0, 257.6, 0.05, 0.25), DomainError);
    auto dom = HalfPlaneDomain::make(EngineConfig{});
    CounterRng rng(1);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        cplx z = dom.sample(rng, i);
        EXPECT_GE(z.real(), 1.0);
        EXPECT_LE(z.real(), dom.x_max);
        EXPECT_LE(std::abs(z.imag()), dom.y_max);
    }
}

TEST(Sampling, PairingContractsAtSmallSpread) {
    EngineConfig cfg;
    auto dom = HalfPlaneDomain::make(cfg);
    auto p1 = ExpParameter::make(0.18), p2 = ExpParameter::make(cplx(0.1805, 0.0003));
    auto st = pairing_contraction_sample(p1, p2, dom, 20000, 3);
    EXPECT_TRUE(st.contracting());
    // identical parameters: |log w1 - log w2| / delta <= 1 / (|w| - delta) < 1
    auto same = pairing_contraction_sample(p1, p1, dom, 20000, 3);
    EXPECT_LT(same.max_ratio, 1.0 / (1.0 - cfg.delta));
}

TEST(Sampling, GrowthRatioWithinBounds) {
    auto dom = HalfPlaneDomain::make(EngineConfig{});
    auto g = balanced_growth_check(ExpParameter::make(0.18), dom, 5000, 9);
    EXPECT_GT(g.min_ratio, std::sqrt(0.5));
    EXPECT_LE(g.max_ratio, 1.0);
}

TEST(Sampling, DeformationFiniteAndZeroSpreadHasNoDerivative) {
    auto dom = HalfPlaneDomain::make(EngineConfig{});
    auto d0 = deformation_bound_sample(0.18, 0.0, dom, 2000, 1);
    EXPECT_EQ(d0.D_hat, 0.0);
    auto d1 = deformation_bound_sample(0.18, 0.005, dom, 2000, 1);
    // d/d lambda log(w / lambda) = -1 / lambda
    EXPECT_NEAR(d1.D_hat, 1.0 / (0.18 - 0.005), 0.2);
    EXPECT_TRUE(std::isfinite(d1.A_hat));
}

TEST(Sampling, ExpansionFloorAboveOne) {
    std::vector<ExpParameter> etas(10, ExpParameter::make(0.18));
    auto dom = HalfPlaneDomain::make(EngineConfig{});
    double g = expansion_floor_sample(etas, dom, 10, 3000, 4);
    EXPECT_GT(g, 1.0);
    EXPECT_THROW(expansion_floor_sample(etas, dom, 11, 10, 4), DomainError);
}
