#include <hdexp/julia.hpp>

#include <gtest/gtest.h>

using namespace hdexp;

namespace {

std::shared_ptr<const FiberSequence> fiber(double a, double r, std::uint64_t seed, std::size_t n) {
    return std::make_shared<const FiberSequence>(sample_fiber(ParameterLaw::make(a, r), seed, n));
}

}  // namespace

TEST(BackwardOrbits, RoundTripReturnsToSeeds) {
    EngineConfig cfg;
    auto js = backward_orbit_sample(fiber(0.18, 0.005, 3, 12), 500, 12, 3, cfg);
    auto rt = round_trip(js, cfg.delta);
    EXPECT_GT(rt.checked, 0);
    EXPECT_EQ(rt.checked + rt.unchecked, 500);
    EXPECT_LT(rt.max_residual, cfg.delta);
    for (cplx z : js.points) EXPECT_GT(z.real(), 1.0);
}

TEST(BackwardOrbits, ShallowRoundTripIsExactToRounding) {
    EngineConfig cfg;
    auto js = backward_orbit_sample(fiber(0.18, 0.0, 1, 3), 200, 3, 9, cfg);
    auto rt = round_trip(js, cfg.delta);
    EXPECT_EQ(rt.unchecked, 0);
    EXPECT_LT(rt.max_residual, 1e-9);
}

TEST(BackwardOrbits, DepthZeroIsTheSeeds) {
    EngineConfig cfg;
    auto js = backward_orbit_sample(fiber(0.18, 0.0, 1, 1), 50, 0, 9, cfg);
    for (std::size_t i = 0; i < 50; ++i) {
        EXPECT_EQ(js.points[i], js.seeds[i]);
        EXPECT_LT(std::abs(js.seeds[i] - cplx(cfg.xi0, 0.0)), cfg.delta);
    }
}

TEST(BackwardOrbits, Validation) {
    EngineConfig cfg;
    auto f = fiber(0.18, 0.0, 1, 5);
    EXPECT_THROW(backward_orbit_sample(f, 10, 6, 1, cfg), DomainError);
    EXPECT_THROW(backward_orbit_sample(f, 0, 3, 1, cfg), DomainError);
    EXPECT_THROW(backward_orbit_sample(f, 10, -1, 1, cfg), DomainError);
}

TEST(Raster, CountsAndFormat) {
    EngineConfig cfg;
    auto js = backward_orbit_sample(fiber(0.18, 0.0, 2, 6), 3000, 6, 2, cfg);
    Raster r = rasterize(js, Window{}, 40, 80);
    std::uint64_t inside = 0;
    for (cplx z : js.points)
        if (z.real() >= 1.0 && z.real() < 5.0 && z.imag() > -10.0 && z.imag() <= 10.0) ++inside;
    EXPECT_EQ(r.total(), inside);
    EXPECT_GT(r.nonzero(), 0);
    std::string pgm = r.pgm("note");
    EXPECT_EQ(pgm.rfind("P5\n# note\n40 80\n255\n", 0), 0u);
    EXPECT_EQ(pgm.size(), std::string("P5\n# note\n40 80\n255\n").size() + 40u * 80u);
    EXPECT_THROW(rasterize(js, Window{5.0, 1.0, -1.0, 1.0}, 4, 4), DomainError);
}

// image bytes for the reference fiber, pinned
TEST(Raster, ReferenceImageChecksum) {
    EngineConfig cfg;
    auto js = backward_orbit_sample(fiber(0.18, 0.01, 7, 25), 4000, 25, 7, cfg);
    Raster r = rasterize(js, Window{}, 100, 200);
    EXPECT_EQ(hex64(fnv1a(r.pgm())), "2be78b922f23ee11");
}
