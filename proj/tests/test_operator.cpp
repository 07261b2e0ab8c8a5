#include <hdexp/operator.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace hdexp;

namespace {

// L1 at a point: full branch sums at 25 digits (explicit |k| <= 400 plus
// an Euler-Maclaurin remainder, stable under doubling the cutoff)
constexpr double kL1AtXi0 = 0.87299151742501328;    // eta = 0.18, t = 1.5, tau = 0.9, w = 2
constexpr double kL1At5p3i = 0.56260024608377092;   // same, w = 5 + 3i
constexpr double kL1Complex = 0.32468069657897992;  // eta = 0.18 + 0.005i, t = 2, tau = 0.9, w = 2

const TransferOperator& default_op() {
    static const TransferOperator op{EngineConfig{}};
    return op;
}

}  // namespace

TEST(ProfileGrid, BasePointIsANode) {
    auto g = ProfileGrid::make(48, 33, 7.0, 2.0);
    double s_xi = std::log1p(std::log(2.0));
    double m = s_xi / g.ds;
    EXPECT_NEAR(m, std::round(m), 1e-12);
    EXPECT_EQ(g.n_phi % 2, 1);
    EXPECT_EQ(ProfileGrid::make(48, 32, 7.0, 2.0).n_phi, 33);
    EXPECT_THROW(ProfileGrid::make(4, 33, 7.0, 2.0), DomainError);
    EXPECT_THROW(ProfileGrid::make(48, 33, 7.0, 0.5), DomainError);
}

TEST(TransferOperator, ConstantFunctionGolden) {
    const auto& op = default_op();
    auto p = ExpParameter::make(0.18);
    auto pot = Potential::make(1.5, 0.9);
    auto g = op.apply(p, pot, op.one());
    EXPECT_NEAR(eval(g, 2.0) / kL1AtXi0, 1.0, 1e-5);
    EXPECT_NEAR(eval(g, cplx(5, 3)) / kL1At5p3i, 1.0, 1e-5);
    auto gc = op.apply(ExpParameter::make(cplx(0.18, 0.005)), Potential::make(2.0, 0.9), op.one());
    EXPECT_NEAR(eval(gc, 2.0) / kL1Complex, 1.0, 1e-5);
}

TEST(TransferOperator, LinearInScale) {
    const auto& op = default_op();
    auto p = ExpParameter::make(0.17);
    auto pot = Potential::make(1.6, 0.9);
    auto g = op.apply(p, pot, op.one());
    auto g3 = g;
    g3.scale(3.0);
    auto a = op.apply(p, pot, g), b = op.apply(p, pot, g3);
    for (cplx z : {cplx(2, 0), cplx(1.5, 4), cplx(30, -80)}) EXPECT_NEAR(eval(b, z) / eval(a, z), 3.0, 1e-12);
}

TEST(TransferOperator, MirrorSymmetryForRealParameter) {
    const auto& op = default_op();
    auto p = ExpParameter::make(0.18);
    auto pot = Potential::make(1.5, 0.9);
    auto g = op.apply(p, pot, op.apply(p, pot, op.one()));
    EXPECT_TRUE(g.mirror_symmetric);
    for (cplx z : {cplx(2, 1), cplx(6, -20), cplx(1.2, 200)}) EXPECT_DOUBLE_EQ(eval(g, z), eval(g, std::conj(z)));
    auto gc = op.apply(ExpParameter::make(cplx(0.18, 0.004)), pot, op.one());
    EXPECT_FALSE(gc.mirror_symmetric);
}

// log L^2 1(xi0) against the preimage-tree sum at tight tolerance
TEST(TransferOperator, TwoStepsMatchDoubleSum) {
    const auto& op = default_op();
    auto pot = Potential::make(1.5, 0.9);
    // L_{0.185} L_{0.175+0.002i} 1 at 2, summed independently to 25 digits
    auto g = op.apply(ExpParameter::make(0.185), pot,
                      op.apply(ExpParameter::make(cplx(0.175, 0.002)), pot, op.one()));
    EXPECT_NEAR(std::log(eval(g, 2.0)), -0.8155426661, 1e-5);
}

TEST(GridFunction, CsvRoundTrip) {
    const auto& op = default_op();
    auto g = op.apply(ExpParameter::make(0.18), Potential::make(1.5, 0.9), op.one());
    std::stringstream ss;
    g.write_csv(ss);
    auto h = GridFunction::read_csv(ss, 2.0);
    for (cplx z : {cplx(2, 0), cplx(3, 7), cplx(50, 1)}) EXPECT_DOUBLE_EQ(eval(g, z), eval(h, z));
    std::stringstream bad("junk\n");
    EXPECT_THROW(GridFunction::read_csv(bad, 2.0), DomainError);
}

TEST(GridFunction, RejectsNegativeProfile) {
    auto grid = ProfileGrid::make(EngineConfig{});
    std::vector<double> q(grid.size(), 1.0);
    q[5] = -1.0;
    EXPECT_THROW(GridFunction::from_profile(grid, 1.5, 0.9, 0.35, q), DomainError);
    EXPECT_THROW(GridFunction::constant(grid, -2.0), DomainError);
}

TEST(NormalizedIteration, FirstLogIsTheConstantImage) {
    const auto& op = default_op();
    BasePointFunctional l{2.0};
    auto st = initial_state(op, l);
    normalized_step(st, op, ExpParameter::make(0.18), Potential::make(1.5, 0.9), l);
    ASSERT_EQ(st.step_logs.size(), 1u);
    EXPECT_NEAR(st.step_logs[0], std::log(kL1AtXi0), 1e-5);
    EXPECT_NEAR(l(st.g), 1.0, 1e-14);
    EXPECT_EQ(st.step_index, 1);
}

TEST(NormalizedIteration, TelescopesToUnnormalizedIterate) {
    const auto& op = default_op();
    BasePointFunctional l{2.0};
    auto pot = Potential::make(1.7, 0.9);
    std::vector<ExpParameter> etas = {ExpParameter::make(0.16), ExpParameter::make(cplx(0.19, -0.003)),
                                      ExpParameter::make(0.18)};
    auto st = initial_state(op, l);
    auto raw = op.one();
    for (const auto& p : etas) {
        normalized_step(st, op, p, pot, l);
        raw = op.apply(p, pot, raw);
    }
    double sum = st.step_logs[0] + st.step_logs[1] + st.step_logs[2];
    EXPECT_NEAR(sum, std::log(l(raw)), 1e-12);
}

TEST(Distances, SupDistanceAndValue) {
    const auto& op = default_op();
    auto g = op.apply(ExpParameter::make(0.18), Potential::make(1.5, 0.9), op.one());
    EXPECT_EQ(sup_distance(g, g), 0.0);
    auto h = g;
    h.scale(2.0);
    EXPECT_NEAR(sup_distance(g, h), sup_value(g), 1e-12 * sup_value(g));
}

TEST(ConvergenceDiagnostic, GeometricForgetting) {
    std::vector<ExpParameter> etas(16, ExpParameter::make(0.18));
    auto rep = density_convergence_diagnostic(etas, Potential::make(1.5, 0.9), BasePointFunctional{2.0}, 8);
    ASSERT_EQ(rep.d.size(), 8u);
    EXPECT_GT(rep.theta_hat, 0.0);
    EXPECT_LT(rep.theta_hat, 1.0);
    EXPECT_GT(rep.r_squared, 0.9);
    EXPECT_THROW(density_convergence_diagnostic(etas, Potential::make(1.5, 0.9), BasePointFunctional{2.0}, 9),
                 DomainError);
}
