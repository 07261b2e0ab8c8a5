#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hdexp {

inline constexpr const char* kVersion = "0.1.0";

// Precondition or domain violations (bad parameters, points outside U).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Numerical failures that are not the caller's fault: positivity loss,
// missing sign change, exhausted node budget.
struct ComputationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every tunable constant of the engine.  Defaults are the reference
// configuration; the CLI overlays a config file and then flags.
struct EngineConfig {
    // parameter region Omega_b and the fixed-point certificate
    double b_config = 0.02;
    int cert_max_iter = 2000;
    double cert_tol = 1e-13;

    // truncated half-plane U used by the sampling checks
    double x_max = 9.0;
    double y_max = 2.0 * std::numbers::pi * 41.0;
    double delta = 0.05;
    double delta0 = 0.25;

    // operator discretization: profile grid in (log1p(log|z|), arg z)
    int n_s = 48;
    int n_phi = 33;
    double s_max = 7.0;
    int k_head = 6;       // explicit branches |k| <= k_head per node
    int n_tail = 16;      // Gauss-Laguerre nodes per side for the k-tail
    double eps_tail = 1e-8;
    double disc_tol = 1e-3;
    double xi0 = 2.0;

    // pressure estimation
    int steps = 2000;
    int burn_in = 50;
    int batches = 20;

    // Bowen zero search
    double t_lo = 1.05;
    double t_hi = 2.0;
    double t_floor = 1.02;
    double t_ceil = 4.0;
    double bisect_width = 1e-2;
    double root_tol = 5e-3;
    int max_polish = 12;
    double tau_floor = 0.95;
    double tau_numer = 1.05;
    bool per_cell_seed = false;

    // oracle
    int oracle_depth = 12;
    double oracle_rel_tol = 1e-4;
    std::int64_t oracle_budget = 100'000'000;
    int oracle_k_head = 2;
    int oracle_n_tail = 3;
    int oracle_leaf_k_head = 6;
    int oracle_leaf_n_tail = 8;
    double oracle_root_tol = 1e-3;

    // audit thresholds
    double r_max = 1e-3;
    int audit_samples = 10000;
    int expansion_depth = 10;
    double kappa_max = 0.95;
    double m_cap = 1e3;
    double decay_eps = 0.01;
    double r2_min = 0.9;
    int audit_steps = 2000;
    int decay_steps = 500;
    int n_probe = 8;
    double audit_t = 1.5;
    double audit_tau = 0.9;

    // julia sampling
    double julia_t = 1.5;
    double julia_eps = 0.05;
    int julia_k_cap = 64;

    // Canonical text used for hashing and for artifact headers.  Thread
    // count is deliberately absent: it never changes results.
    [[nodiscard]] std::string canonical() const {
        std::ostringstream os;
        os.precision(17);
        os << "b_config=" << b_config << ";cert_max_iter=" << cert_max_iter
           << ";cert_tol=" << cert_tol << ";x_max=" << x_max << ";y_max=" << y_max
           << ";delta=" << delta << ";delta0=" << delta0 << ";n_s=" << n_s
           << ";n_phi=" << n_phi << ";s_max=" << s_max << ";k_head=" << k_head
           << ";n_tail=" << n_tail << ";eps_tail=" << eps_tail
           << ";disc_tol=" << disc_tol << ";xi0=" << xi0 << ";steps=" << steps
           << ";burn_in=" << burn_in << ";batches=" << batches << ";t_lo=" << t_lo
           << ";t_hi=" << t_hi << ";t_floor=" << t_floor << ";t_ceil=" << t_ceil
           << ";bisect_width=" << bisect_width << ";root_tol=" << root_tol
           << ";max_polish=" << max_polish << ";tau_floor=" << tau_floor
           << ";tau_numer=" << tau_numer << ";per_cell_seed=" << per_cell_seed
           << ";oracle_depth=" << oracle_depth << ";oracle_rel_tol=" << oracle_rel_tol
           << ";oracle_budget=" << oracle_budget << ";oracle_k_head=" << oracle_k_head
           << ";oracle_n_tail=" << oracle_n_tail << ";oracle_leaf_k_head=" << oracle_leaf_k_head
           << ";oracle_leaf_n_tail=" << oracle_leaf_n_tail
           << ";oracle_root_tol=" << oracle_root_tol << ";r_max=" << r_max
           << ";audit_samples=" << audit_samples
           << ";expansion_depth=" << expansion_depth << ";kappa_max=" << kappa_max
           << ";m_cap=" << m_cap << ";decay_eps=" << decay_eps << ";r2_min=" << r2_min
           << ";audit_steps=" << audit_steps << ";decay_steps=" << decay_steps
           << ";n_probe=" << n_probe << ";audit_t=" << audit_t
           << ";audit_tau=" << audit_tau << ";julia_t=" << julia_t
           << ";julia_eps=" << julia_eps << ";julia_k_cap=" << julia_k_cap;
        return os.str();
    }
};

// FNV-1a, used for config hashes and image checksums.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 15];
    return out;
}

inline std::string config_hash(const EngineConfig& cfg) { return hex64(fnv1a(cfg.canonical())); }

// tau(t) used by the root finder: max(tau_floor, tau_numer/t) when that is
// below one; otherwise the midpoint (1 + 1/t)/2, which keeps tau < 1 < tau*t.
inline double tau_schedule(double t, const EngineConfig& cfg) {
    double tau = std::max(cfg.tau_floor, cfg.tau_numer / t);
    if (tau >= 1.0) tau = 0.5 * (1.0 + 1.0 / t);
    return tau;
}

}  // namespace hdexp
