#include <hdexp/randomdriver.hpp>

#include <gtest/gtest.h>

using namespace hdexp;

TEST(CounterRng, ReproducibleAndStreamsIndependent) {
    CounterRng a(7), b(7), c(7, 1), d(8);
    for (std::uint64_t i = 0; i < 100; ++i) {
        EXPECT_EQ(a.bits(i), b.bits(i));
        EXPECT_NE(a.bits(i), c.bits(i));
        EXPECT_NE(a.bits(i), d.bits(i));
        double u = a.uniform(i);
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(std::abs(a.unit_disk(i)), 1.0);
    }
}

TEST(CounterRng, UniformMoments) {
    CounterRng r(11);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform(static_cast<std::uint64_t>(i));
        s += u;
        s2 += u * u;
    }
    EXPECT_NEAR(s / n, 0.5, 4e-3);
    EXPECT_NEAR(s2 / n, 1.0 / 3.0, 4e-3);
}

TEST(ParameterLaw, Validation) {
    EXPECT_NO_THROW(ParameterLaw::make(0.18, 0.01));
    EXPECT_THROW(ParameterLaw::make(0.18, -0.001), DomainError);
    EXPECT_THROW(ParameterLaw::make(0.10, 0.0), DomainError);
    EXPECT_THROW(ParameterLaw::make(0.25, 0.0), DomainError);
    EXPECT_THROW(ParameterLaw::make(0.18, 0.02), DomainError);  // wider than b/2
}

TEST(SampleFiber, ZeroSpreadIsConstant) {
    auto f = sample_fiber(ParameterLaw::make(0.18, 0.0), 3, 50);
    ASSERT_EQ(f.size(), 50u);
    for (const auto& p : f.etas) EXPECT_EQ(p.eta, cplx(0.18, 0.0));
    EXPECT_TRUE(f.constant());
}

TEST(SampleFiber, DrawsStayInDiskAndAreSeeded) {
    auto law = ParameterLaw::make(0.17, 0.008);
    auto f1 = sample_fiber(law, 42, 500), f2 = sample_fiber(law, 42, 500), f3 = sample_fiber(law, 43, 500);
    bool differs = false;
    for (std::size_t i = 0; i < 500; ++i) {
        EXPECT_EQ(f1.etas[i].eta, f2.etas[i].eta);
        EXPECT_LT(std::abs(f1.etas[i].eta - cplx(0.17, 0.0)), 0.008);
        differs = differs || f1.etas[i].eta != f3.etas[i].eta;
    }
    EXPECT_TRUE(differs);
    EXPECT_FALSE(f1.constant());
}

TEST(SampleFiber, PrefixIndependentOfLength) {
    auto law = ParameterLaw::make(0.18, 0.005);
    auto a = sample_fiber(law, 9, 10), b = sample_fiber(law, 9, 1000);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a.etas[i].eta, b.etas[i].eta);
}

TEST(SampleFiber, RealModeStaysOnTheAxis) {
    auto law = ParameterLaw::make(0.18, 0.005, {}, SamplingMode::real_interval);
    auto f = sample_fiber(law, 1, 200);
    for (const auto& p : f.etas) {
        EXPECT_EQ(p.eta.imag(), 0.0);
        EXPECT_LE(std::abs(p.eta.real() - 0.18), 0.005);
    }
}

// draws of two laws from one seed differ only through a and r
TEST(SampleFiber, LawsCoupledThroughSeed) {
    auto f1 = sample_fiber(ParameterLaw::make(0.16, 0.004), 5, 100);
    auto f2 = sample_fiber(ParameterLaw::make(0.19, 0.008), 5, 100);
    for (std::size_t i = 0; i < 100; ++i) {
        cplx u1 = (f1.etas[i].eta - 0.16) / 0.004, u2 = (f2.etas[i].eta - 0.19) / 0.008;
        EXPECT_NEAR(std::abs(u1 - u2), 0.0, 1e-9);
    }
}

TEST(CommonRandomNumbers, SharedFiber) {
    auto law = ParameterLaw::make(0.18, 0.003);
    auto f = common_random_numbers(law, 1, 64, {1.2, 1.5});
    EXPECT_EQ(f->size(), 64u);
    EXPECT_THROW(common_random_numbers(law, 1, 64, {}), DomainError);
    EXPECT_THROW(sample_fiber(law, 1, 0), DomainError);
}

TEST(FiberSequence, CsvRoundTripsDraws) {
    auto f = sample_fiber(ParameterLaw::make(0.18, 0.004), 2, 3);
    std::ostringstream os;
    f.write_csv(os);
    std::string s = os.str();
    EXPECT_EQ(s.rfind("index,re_eta,im_eta\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}
