#pragma once

#include "config.hpp"
#include "expfamily.hpp"
#include "operator.hpp"
#include "pressure.hpp"
#include "randomdriver.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace hdexp {

struct AuditCheck {
    std::string name;
    std::vector<std::pair<std::string, double>> measured;
    std::string threshold;
    bool pass = false;
};

struct AuditReport {
    ParameterLaw law;
    std::uint64_t seed = 0;
    std::vector<AuditCheck> checks;
    [[nodiscard]] bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return !checks.empty();
    }
};

struct RunBounds {
    double sup_max = 0.0;   // max over steps of sup g
    double l_min = 0.0;     // min over steps after burn-in of l(L g)
    GridFunction last;
};

namespace detail {

inline bool finite(double x) { return std::isfinite(x); }

// Normalized run recording sup g and l(L g).  A constant fiber stops once the
// iterate is a fixed point to round-off; later steps would repeat it.
inline RunBounds bounded_run(const FiberSequence& fiber, std::size_t steps, const Potential& pot,
                             const EngineConfig& cfg) {
    TransferOperator op(cfg);
    BasePointFunctional l{cplx(cfg.xi0, 0.0)};
    NormalizedIterationState st = initial_state(op, l);
    RunBounds rb;
    rb.l_min = std::numeric_limits<double>::infinity();
    const bool autonomous = constant_fiber(fiber);
    int repeats = 0;
    for (std::size_t n = 0; n < steps; ++n) {
        normalized_step(st, op, fiber.etas[n % fiber.size()], pot, l);
        rb.sup_max = std::max(rb.sup_max, sup_value(st.g));
        if (n >= static_cast<std::size_t>(cfg.burn_in) || steps <= static_cast<std::size_t>(cfg.burn_in))
            rb.l_min = std::min(rb.l_min, std::exp(st.step_logs.back()));
        if (autonomous && n > 0) {
            double a = st.step_logs[n], b = st.step_logs[n - 1];
            repeats = std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a)) ? repeats + 1 : 0;
            if (repeats >= 3 && n >= static_cast<std::size_t>(cfg.burn_in)) break;
        }
    }
    rb.last = std::move(st.g);
    return rb;
}

}  // namespace detail

// Numeric shadows of the standing hypotheses, in a fixed order.  A failing
// check never stops the audit.
inline AuditReport run_hypothesis_audit(const ParameterLaw& law_in, std::uint64_t seed, const EngineConfig& cfg) {
    const ParameterLaw law = ParameterLaw::make(law_in.a, law_in.r, cfg, law_in.mode);
    const HalfPlaneDomain dom = HalfPlaneDomain::make(cfg);
    const std::size_t len = std::max<std::size_t>({static_cast<std::size_t>(cfg.audit_steps),
                                                   static_cast<std::size_t>(2 * cfg.n_probe),
                                                   static_cast<std::size_t>(cfg.expansion_depth), 2});
    const FiberSequence fiber = sample_fiber(law, seed, len, cfg);
    const Potential pot = Potential::make(cfg.audit_t, cfg.audit_tau);
    const auto n_samples = static_cast<std::int64_t>(cfg.audit_samples);
    AuditReport rep;
    rep.law = law;
    rep.seed = seed;

    {
        double g = expansion_floor_sample(fiber.etas, dom, cfg.expansion_depth, n_samples, seed);
        rep.checks.push_back({"expansion", {{"gamma_hat", g}, {"depth", double(cfg.expansion_depth)}}, "gamma_hat > 1",
                              g > 1.0});
    }
    {
        PairingStats ps = pairing_contraction_sample(fiber.etas[0], fiber.etas[1], dom, n_samples, seed);
        rep.checks.push_back({"pairing_contraction",
                              {{"kappa_hat", ps.max_ratio}, {"delta", cfg.delta}},
                              "kappa_hat < " + std::to_string(cfg.kappa_max),
                              ps.max_ratio < cfg.kappa_max});
    }
    {
        DeformationStats ds = deformation_bound_sample(law.a, law.r, dom, n_samples, seed);
        rep.checks.push_back({"bounded_deformation",
                              {{"D_hat", ds.D_hat}, {"A_hat", ds.A_hat}},
                              "D_hat, A_hat finite",
                              detail::finite(ds.D_hat) && detail::finite(ds.A_hat)});
    }
    {
        GrowthStats gs = balanced_growth_check(fiber.etas[0], dom, n_samples, seed);
        rep.checks.push_back({"balanced_growth",
                              {{"kappa_growth_min", gs.min_ratio}, {"kappa_growth_max", gs.max_ratio}},
                              "ratio in (1/sqrt(2), 1]",
                              gs.min_ratio > std::sqrt(0.5) && gs.max_ratio <= 1.0});
    }
    {
        RunBounds rb = detail::bounded_run(fiber, static_cast<std::size_t>(cfg.audit_steps), pot, cfg);
        rep.checks.push_back({"uniform_bound_positivity",
                              {{"M_hat", rb.sup_max}, {"a_hat", rb.l_min}},
                              "M_hat <= " + std::to_string(cfg.m_cap) + " and a_hat > 0",
                              detail::finite(rb.sup_max) && rb.sup_max <= cfg.m_cap && rb.l_min > 0.0});
    }
    {
        // slope of log g against log(1 + |z|) along Re z = xi0, Im z in [10, y_max/2]
        RunBounds rb = detail::bounded_run(fiber, static_cast<std::size_t>(cfg.decay_steps), pot, cfg);
        const int m = 64;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < m; ++i) {
            double y = 10.0 * std::pow(cfg.y_max / 20.0, double(i) / (m - 1));
            cplx z(cfg.xi0, y);
            double X = std::log1p(std::abs(z)), Y = std::log(eval(rb.last, z));
            sx += X, sy += Y, sxx += X * X, sxy += X * Y;
        }
        double slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
        rep.checks.push_back({"density_decay",
                              {{"slope", slope}, {"minus_tau_t", -pot.tau * pot.t}},
                              "slope <= -" + std::to_string(cfg.decay_eps),
                              detail::finite(slope) && slope <= -cfg.decay_eps});
    }
    {
        ConvergenceReport cr = density_convergence_diagnostic(fiber.etas, pot, BasePointFunctional{cplx(cfg.xi0, 0.0)},
                                                              cfg.n_probe, cfg);
        rep.checks.push_back({"convergence_speed",
                              {{"theta_hat", cr.theta_hat}, {"r_squared", cr.r_squared}},
                              "theta_hat < 1 and R^2 > " + std::to_string(cfg.r2_min),
                              cr.theta_hat > 0.0 && cr.theta_hat < 1.0 && cr.r_squared > cfg.r2_min});
    }
    return rep;
}

}  // namespace hdexp
