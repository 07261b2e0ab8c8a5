#pragma once

#include "config.hpp"
#include "expfamily.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "randomdriver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hdexp {

struct PressureEstimate {
    double t = 0.0;
    double tau = 0.0;
    double value = 0.0;      // mean of step_logs after burn-in
    double std_error = 0.0;  // batch means
    std::int64_t N = 0;
    std::int64_t burn_in = 0;
    std::int64_t computed_steps = 0;  // < N when an autonomous run was cut short
    std::vector<double> step_logs;
};

namespace detail {

inline double batch_means_error(const std::vector<double>& x, std::size_t from, int batches) {
    std::size_t m = x.size() - from;
    if (batches < 2 || m < static_cast<std::size_t>(batches)) return 0.0;
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) {
        std::size_t lo = from + m * static_cast<std::size_t>(b) / static_cast<std::size_t>(batches);
        std::size_t hi = from + m * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(batches);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += x[i];
        means.push_back(s / static_cast<double>(hi - lo));
    }
    double mu = 0.0;
    for (double v : means) mu += v;
    mu /= batches;
    double var = 0.0;
    for (double v : means) var += (v - mu) * (v - mu);
    var /= (batches - 1);
    return std::sqrt(var / batches);
}

inline bool constant_fiber(const FiberSequence& f) {
    for (const auto& p : f.etas)
        if (p.eta != f.etas.front().eta) return false;
    return true;
}

}  // namespace detail

// Birkhoff average of log l(L g_n) along the fiber.  For a constant fiber
// the normalized iterates reach a fixed point; once the step log repeats to
// round-off for a few steps the remaining entries are filled in.
inline PressureEstimate estimate_expected_pressure(const FiberSequence& fiber, const Potential& pot,
                                                   const BasePointFunctional& l, const EngineConfig& cfg,
                                                   const TransferOperator* op_in = nullptr) {
    const auto N = static_cast<std::int64_t>(fiber.size());
    const std::int64_t B = cfg.burn_in;
    if (N < B + 200) {
        std::ostringstream os;
        os << "fiber length " << N << " below burn-in + 200 = " << B + 200;
        throw DomainError(os.str());
    }
    std::optional<TransferOperator> own;
    if (!op_in) own.emplace(cfg);
    const TransferOperator& op = op_in ? *op_in : *own;

    const bool autonomous = detail::constant_fiber(fiber);
    NormalizedIterationState st = initial_state(op, l);
    st.step_logs.reserve(static_cast<std::size_t>(N));
    int repeats = 0;
    for (std::int64_t n = 0; n < N; ++n) {
        normalized_step(st, op, fiber.etas[static_cast<std::size_t>(n)], pot, l);
        if (!autonomous || n == 0) continue;
        double a = st.step_logs[st.step_logs.size() - 1], b = st.step_logs[st.step_logs.size() - 2];
        repeats = std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a)) ? repeats + 1 : 0;
        if (repeats >= 3) break;
    }
    PressureEstimate est;
    est.t = pot.t;
    est.tau = pot.tau;
    est.N = N;
    est.burn_in = B;
    est.computed_steps = static_cast<std::int64_t>(st.step_logs.size());
    est.step_logs = std::move(st.step_logs);
    est.step_logs.resize(static_cast<std::size_t>(N), est.step_logs.back());
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(B); i < est.step_logs.size(); ++i) s += est.step_logs[i];
    est.value = s / static_cast<double>(N - B);
    est.std_error = detail::batch_means_error(est.step_logs, static_cast<std::size_t>(B), cfg.batches);
    return est;
}

struct DimensionResult {
    ParameterLaw law;
    std::uint64_t seed = 0;
    double h = 0.0;
    double t_lo = 0.0;  // final bracket
    double t_hi = 0.0;
    double residual = 0.0;  // |EP(h)|
    int evaluations = 0;
    double slope = 0.0;        // secant slope of EP near h
    double h_std_error = 0.0;  // hypot(EP std error, residual) / |slope|
    std::vector<std::pair<double, double>> samples;  // (t, EP) in evaluation order
};

// t -> EP(t) on one shared fiber; tau follows the schedule unless fixed.
class PressureCurve {
public:
    PressureCurve(std::shared_ptr<const FiberSequence> fiber, const EngineConfig& cfg)
        : fiber_(std::move(fiber)), cfg_(cfg), op_(cfg) {}

    PressureEstimate operator()(double t, std::optional<double> tau = std::nullopt) const {
        Potential pot = Potential::make(t, tau ? *tau : tau_schedule(t, cfg_));
        return estimate_expected_pressure(*fiber_, pot, BasePointFunctional{cplx(cfg_.xi0, 0.0)}, cfg_, &op_);
    }

    [[nodiscard]] const FiberSequence& fiber() const { return *fiber_; }

private:
    std::shared_ptr<const FiberSequence> fiber_;
    EngineConfig cfg_;
    TransferOperator op_;
};

// Bracket, bisect to bisect_width, then secant steps kept inside the
// bracket.  The secant continues past root_tol while it keeps improving so
// that neighbouring cells of a sweep are resolved well below their noise.
inline DimensionResult find_bowen_zero(const ParameterLaw& law, std::uint64_t seed, const EngineConfig& cfg) {
    auto fiber = common_random_numbers(law, seed, static_cast<std::size_t>(cfg.steps), {cfg.t_lo, cfg.t_hi}, cfg);
    PressureCurve curve(fiber, cfg);
    DimensionResult res;
    res.law = law;
    res.seed = seed;
    std::vector<double> se_at;
    auto f = [&](double t) {
        PressureEstimate e = curve(t);
        res.samples.emplace_back(t, e.value);
        se_at.push_back(e.std_error);
        ++res.evaluations;
        return e.value;
    };
    auto fail = [&](const std::string& why) {
        std::ostringstream os;
        os.precision(6);
        os << why << " for a = " << law.a << ", r = " << law.r << "; EP samples:";
        for (auto [t, v] : res.samples) os << " (" << t << ", " << v << ")";
        throw ComputationError(os.str());
    };

    double lo = cfg.t_lo, hi = cfg.t_hi;
    double flo = f(lo), fhi = f(hi);
    if (flo <= 0.0 && lo > cfg.t_floor) {
        lo = cfg.t_floor;
        flo = f(lo);
    }
    while (fhi >= 0.0 && hi < cfg.t_ceil) {
        lo = hi;
        flo = fhi;
        hi = std::min(cfg.t_ceil, hi + 1.0);
        fhi = f(hi);
    }
    if (!(flo > 0.0 && fhi < 0.0)) fail("no sign change of EP in [" + std::to_string(cfg.t_floor) + ", " + std::to_string(cfg.t_ceil) + "]");

    while (hi - lo > cfg.bisect_width) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm > 0.0) lo = mid, flo = fm;
        else if (fm < 0.0) hi = mid, fhi = fm;
        else {
            lo = hi = mid;
            flo = fhi = 0.0;
            break;
        }
    }

    double best_t = std::abs(flo) < std::abs(fhi) ? lo : hi;
    double best_f = std::abs(flo) < std::abs(fhi) ? flo : fhi;
    double best_se = 0.0;
    double slope = hi > lo ? (fhi - flo) / (hi - lo) : -1.0;
    // secant on the two most recent points, safeguarded by the bracket
    double t0 = lo, f0 = flo, t1 = hi, f1 = fhi;
    for (int it = 0; it < cfg.max_polish && hi > lo; ++it) {
        if (std::abs(best_f) < 1e-3 * cfg.root_tol) break;
        double tn = t1 - f1 * (t1 - t0) / (f1 - f0);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        double fn = f(tn);
        slope = (fn - f1) / (tn - t1);
        if (fn > 0.0) lo = tn, flo = fn;
        else hi = tn, fhi = fn;
        t0 = t1, f0 = f1, t1 = tn, f1 = fn;
        bool improved = std::abs(fn) < std::abs(best_f);
        if (improved) {
            best_t = tn;
            best_f = fn;
            best_se = se_at.back();
        }
        if (!improved && std::abs(best_f) < cfg.root_tol) break;
    }
    if (best_se == 0.0) {
        for (std::size_t i = 0; i < res.samples.size(); ++i)
            if (res.samples[i].first == best_t) best_se = se_at[i];
    }
    res.h = best_t;
    res.t_lo = lo;
    res.t_hi = hi;
    res.residual = std::abs(best_f);
    res.slope = slope;
    res.h_std_error = std::hypot(best_se, res.residual) / std::max(std::abs(slope), 1e-12);
    if (!(res.residual < cfg.root_tol)) fail("secant polish did not reach |EP| < root_tol");
    return res;
}

struct SweepCell {
    double a = 0.0;
    double r = 0.0;
    std::uint64_t seed = 0;
    std::optional<DimensionResult> result;
    std::string error;
};

// One find_bowen_zero per (a, r).  All cells share the seed unless
// per_cell_seed is set, in which case cell c uses seed ^ c.  Cells are
// independent tasks; failures are recorded and the sweep goes on.
inline std::vector<SweepCell> sweep_dimension(const std::vector<double>& a_grid, const std::vector<double>& r_grid,
                                              std::uint64_t seed, const EngineConfig& cfg) {
    std::vector<SweepCell> cells;
    for (double r : r_grid)
        for (double a : a_grid) {
            SweepCell c;
            c.a = a;
            c.r = r;
            c.seed = cfg.per_cell_seed ? seed ^ static_cast<std::uint64_t>(cells.size()) : seed;
            cells.push_back(c);
        }
    // validate every law before any work
    for (auto& c : cells) ParameterLaw::make(c.a, c.r, cfg);
    parallel_for(cells.size(), [&](std::size_t i) {
        SweepCell& c = cells[i];
        try {
            c.result = find_bowen_zero(ParameterLaw::make(c.a, c.r, cfg), c.seed, cfg);
        } catch (const std::exception& e) {
            c.error = e.what();
        }
    });
    return cells;
}

struct SmoothnessReport {
    std::vector<double> coefficients;  // Chebyshev T_0..T_6 on the mapped interval
    double max_residual = 0.0;
    double noise_floor = 0.0;  // median h standard error
    bool consistent = false;   // max_residual < 3 * noise_floor
};

inline SmoothnessReport smoothness_diagnostic(const std::vector<double>& x, const std::vector<double>& h,
                                              const std::vector<double>& h_err, int degree = 6) {
    if (x.size() != h.size() || x.size() != h_err.size()) throw DomainError("smoothness: size mismatch");
    if (x.size() < 12) throw DomainError("smoothness: need at least 12 samples");
    auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    double lo = *mn, hi = *mx;
    if (!(hi > lo)) throw DomainError("smoothness: samples must span an interval");
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd V(n, degree + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double u = (2.0 * x[static_cast<std::size_t>(i)] - lo - hi) / (hi - lo);
        V(i, 0) = 1.0;
        if (degree >= 1) V(i, 1) = u;
        for (int k = 2; k <= degree; ++k) V(i, k) = 2.0 * u * V(i, k - 1) - V(i, k - 2);
        y(i) = h[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);
    SmoothnessReport rep;
    rep.coefficients.assign(c.data(), c.data() + c.size());
    rep.max_residual = (V * c - y).cwiseAbs().maxCoeff();
    std::vector<double> e = h_err;
    std::sort(e.begin(), e.end());
    std::size_t m = e.size();
    rep.noise_floor = m % 2 ? e[m / 2] : 0.5 * (e[m / 2 - 1] + e[m / 2]);
    rep.consistent = rep.max_residual < 3.0 * rep.noise_floor;
    return rep;
}

struct SlopeSample {
    double t1 = 0.0, t2 = 0.0;
    double ep1 = 0.0, ep2 = 0.0;
    double slope = 0.0;
    double std_error = 0.0;  // of the slope
};

struct SlopeReport {
    std::vector<SlopeSample> pairs;
    double max_slope = 0.0;
    double gamma_hat = 0.0;  // empirical expansion floor
    bool all_negative = false;
    bool bound_holds = false;  // |slope| >= log gamma_hat - 2 se for every pair
};

inline SlopeReport pressure_slope_check(const ParameterLaw& law, std::uint64_t seed,
                                        const std::vector<std::pair<double, double>>& t_pairs,
                                        const EngineConfig& cfg) {
    if (t_pairs.empty()) throw DomainError("no t pairs");
    auto fiber = common_random_numbers(law, seed, static_cast<std::size_t>(cfg.steps), {t_pairs.front().first}, cfg);
    PressureCurve curve(fiber, cfg);
    SlopeReport rep;
    rep.max_slope = -std::numeric_limits<double>::infinity();
    for (auto [t1, t2] : t_pairs) {
        if (!(t2 != t1)) throw DomainError("degenerate t pair");
        PressureEstimate e1 = curve(t1), e2 = curve(t2);
        SlopeSample s{t1, t2, e1.value, e2.value, (e2.value - e1.value) / (t2 - t1),
                      std::hypot(e1.std_error, e2.std_error) / std::abs(t2 - t1)};
        rep.max_slope = std::max(rep.max_slope, s.slope);
        rep.pairs.push_back(s);
    }
    HalfPlaneDomain dom = HalfPlaneDomain::make(cfg);
    int depth = std::min<int>(cfg.expansion_depth, static_cast<int>(fiber->size()));
    rep.gamma_hat = expansion_floor_sample(std::span<const ExpParameter>(fiber->etas).first(static_cast<std::size_t>(depth)), dom,
                                           depth, cfg.audit_samples, seed);
    rep.all_negative = std::all_of(rep.pairs.begin(), rep.pairs.end(), [](const SlopeSample& s) { return s.slope < 0.0; });
    double lg = std::log(rep.gamma_hat);
    rep.bound_holds = std::all_of(rep.pairs.begin(), rep.pairs.end(),
                                  [&](const SlopeSample& s) { return -s.slope >= lg - 2.0 * s.std_error; });
    return rep;
}

}  // namespace hdexp
