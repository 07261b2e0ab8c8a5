#pragma once

#include "config.hpp"
#include "rng.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

namespace hdexp {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Re(eta) must lie in (1/(6e), 5/(6e)).
inline constexpr double kEtaReMin = 1.0 / (6.0 * std::numbers::e);
inline constexpr double kEtaReMax = 5.0 / (6.0 * std::numbers::e);

// Multiplier of f(z) = eta * exp(z), validated on construction.
struct ExpParameter {
    cplx eta{};
    cplx fixed_point{};   // attracting fixed point reached by the orbit of 0
    double multiplier{};  // |f'(fixed_point)| = |fixed_point|

    static ExpParameter make(cplx eta, const EngineConfig& cfg = {}) {
        if (!(eta.real() > kEtaReMin && eta.real() < kEtaReMax) || !(std::abs(eta.imag()) < cfg.b_config)) {
            std::ostringstream os;
            os.precision(17);
            os << "eta = " << eta << " outside Omega_b (b = " << cfg.b_config << ")";
            throw DomainError(os.str());
        }
        // The asymptotic value 0 must be attracted to a fixed point; at a
        // fixed point f' = f = z, so attracting means |z| < 1.
        cplx z = 0.0;
        for (int i = 0; i < cfg.cert_max_iter; ++i) {
            cplx next = eta * std::exp(z);
            if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) break;
            bool settled = std::abs(next - z) < cfg.cert_tol;
            z = next;
            if (settled) {
                if (std::abs(z) < 1.0) return ExpParameter{eta, z, std::abs(z)};
                break;
            }
        }
        std::ostringstream os;
        os.precision(17);
        os << "hyperbolicity certificate failed for eta = " << eta << " (orbit of 0 ended at " << z << ")";
        throw DomainError(os.str());
    }
};

// Exponents of the potential -t log|f'| - (t tau / 2) log((1+|z|^2)/(1+|f(z)|^2)).
struct Potential {
    double t{};
    double tau{};

    static Potential make(double t, double tau) {
        if (!(t > 1.0) || !(tau > 0.0 && tau < 1.0) || !(t * tau > 1.0)) {
            std::ostringstream os;
            os << "invalid potential t = " << t << ", tau = " << tau << " (need t > 1, 0 < tau < 1, t*tau > 1)";
            throw DomainError(os.str());
        }
        return {t, tau};
    }
};

// U = {Re z > 1}, truncated to [1, x_max] x [-y_max, y_max] for sampling.
struct HalfPlaneDomain {
    double x_min = 1.0;
    double x_max{};
    double y_max{};
    double delta{};
    double delta0{};

    static HalfPlaneDomain make(const EngineConfig& cfg) {
        return make(cfg.x_max, cfg.y_max, cfg.delta, cfg.delta0);
    }

    static HalfPlaneDomain make(double x_max, double y_max, double delta, double delta0) {
        if (!(delta > 0.0 && delta <= delta0 && delta0 <= 0.25))
            throw DomainError("need 0 < delta <= delta0 <= 1/4");
        if (!(y_max > 0.0)) throw DomainError("y_max must be positive");
        // every preimage of a point of the box stays inside the box in Re
        double need = std::log(std::hypot(x_max, y_max)) - std::log(kEtaReMin) + 0.5;
        if (!(x_max > need)) {
            std::ostringstream os;
            os << "x_max = " << x_max << " too small for y_max = " << y_max << " (need > " << need << ")";
            throw DomainError(os.str());
        }
        return {1.0, x_max, y_max, delta, delta0};
    }

    [[nodiscard]] cplx sample(const CounterRng& rng, std::uint64_t i) const {
        return {x_min + (x_max - x_min) * rng.uniform(2 * i), y_max * (2.0 * rng.uniform(2 * i + 1) - 1.0)};
    }
};

// z_k = Log(w/eta) + 2 pi i k for k = -K..K.
inline std::vector<cplx> preimages(const ExpParameter& p, cplx w, int K) {
    if (w == cplx{}) throw DomainError("w = 0 has no preimage");
    if (!(std::abs(w) > std::numbers::e * std::abs(p.eta)))
        throw DomainError("|w| <= e|eta|: preimages would leave U");
    if (K < 0) throw DomainError("K must be nonnegative");
    cplx base = std::log(w / p.eta);
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(2 * K + 1));
    for (int k = -K; k <= K; ++k) out.push_back(base + cplx(0.0, kTwoPi * k));
    return out;
}

inline double log_weight(const Potential& pot, cplx z, cplx w) {
    double aw = std::abs(w);
    double az = std::abs(z);
    return -pot.t * std::log(aw) - 0.5 * pot.tau * pot.t * (std::log1p(az * az) - std::log1p(aw * aw));
}

// e^{phi(z)} for w = f(z): |w|^{-t} ((1+|z|^2)/(1+|w|^2))^{-tau t/2}
inline double weight(const Potential& pot, cplx z, cplx w) { return std::exp(log_weight(pot, z, w)); }

namespace detail {

// J(y) = int_y^inf (1+v^2)^{-s} dv for s > 1/2, any real y.
inline double tail_integral(double s, double y) {
    double a = s - 0.5;
    double full = 0.5 * boost::math::beta(a, 0.5);  // J(0)
    if (y == 0.0) return full;
    double ay = std::abs(y);
    // 1 + y^2 overflows; the leading term is exact to O(y^-2)
    if (ay > 1e150) {
        double part = std::exp((1.0 - 2.0 * s) * std::log(ay)) / (2.0 * s - 1.0);
        return y > 0.0 ? part : 2.0 * full - part;
    }
    double part = 0.5 * boost::math::beta(a, 0.5, 1.0 / (1.0 + ay * ay));
    return y > 0.0 ? part : 2.0 * full - part;
}

// bound(K) / (k=0 term) from the integral comparison of the monotone tail
inline double relative_tail_bound(double s, double K, double z0_abs) {
    return tail_integral(s, kTwoPi * K - std::numbers::pi) / std::numbers::pi * std::pow(1.0 + z0_abs * z0_abs, s);
}

}  // namespace detail

// Smallest K (as a real number, possibly astronomically large) such that
// the tail bound drops below eps_tail times the k = 0 term.
inline double truncation_order_real(const ExpParameter& p, const Potential& pot, cplx w, double eps_tail) {
    if (!(eps_tail > 0.0)) throw DomainError("eps_tail must be positive");
    double s = 0.5 * pot.tau * pot.t;
    if (!(2.0 * s > 1.0)) throw DomainError("series diverges: tau * t <= 1");
    double z0 = std::abs(std::log(w / p.eta));
    auto ok = [&](double K) { return detail::relative_tail_bound(s, K, z0) < eps_tail; };
    if (ok(0.0)) return 0.0;
    double hi = 1.0;
    while (!ok(hi)) {
        hi *= 2.0;
        if (hi > 1e300) return std::numeric_limits<double>::infinity();
    }
    double lo = hi / 2.0;
    if (hi <= 2.0) lo = 0.0;
    // integer bisection while K fits exactly in a double
    if (hi < 0x1.0p52) {
        auto l = static_cast<std::uint64_t>(lo), h = static_cast<std::uint64_t>(hi);
        while (h - l > 1) {
            std::uint64_t m = l + (h - l) / 2;
            if (ok(static_cast<double>(m))) h = m;
            else l = m;
        }
        return static_cast<double>(h);
    }
    for (int i = 0; i < 200 && hi - lo > 1.0 && hi > lo * (1 + 1e-15); ++i) {
        double m = 0.5 * (lo + hi);
        if (ok(m)) hi = m;
        else lo = m;
    }
    return std::ceil(hi);
}

inline std::uint64_t truncation_order(const ExpParameter& p, const Potential& pot, cplx w, double eps_tail) {
    double K = truncation_order_real(p, pot, w, eps_tail);
    if (!(K < 0x1.0p62)) {
        std::ostringstream os;
        os << "truncation order " << K << " not representable for t = " << pot.t << ", tau = " << pot.tau
           << ", eps_tail = " << eps_tail;
        throw ComputationError(os.str());
    }
    return static_cast<std::uint64_t>(K);
}

struct PairingStats {
    double max_ratio = 0.0;  // empirical kappa
    std::int64_t samples = 0;
    [[nodiscard]] bool contracting() const { return max_ratio < 1.0; }
};

inline constexpr int kSampleBranches = 8;

// Matched inverse branches applied to random delta-close pairs.
inline PairingStats pairing_contraction_sample(const ExpParameter& p1, const ExpParameter& p2,
                                               const HalfPlaneDomain& dom, std::int64_t n_samples,
                                               std::uint64_t seed) {
    if (n_samples <= 0) throw DomainError("empty sample");
    CounterRng rw(seed, 1), rd(seed, 2), rk(seed, 3);
    PairingStats st;
    st.samples = n_samples;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        auto ui = static_cast<std::uint64_t>(i);
        cplx w1 = dom.sample(rw, ui);
        cplx w2 = w1 + dom.delta * rd.unit_disk(ui);
        int k = static_cast<int>(rk.bits(ui) % (2 * kSampleBranches + 1)) - kSampleBranches;
        cplx shift(0.0, kTwoPi * k);
        cplx z1 = std::log(w1 / p1.eta) + shift;
        cplx z2 = std::log(w2 / p2.eta) + shift;
        st.max_ratio = std::max(st.max_ratio, std::abs(z1 - z2) / dom.delta);
    }
    return st;
}

struct DeformationStats {
    double D_hat = 0.0;  // sup |d f^{-1} / d lambda|
    double A_hat = 0.0;  // sup |arg(f'(z1) / f'(z2))| over 1-pairings
};

inline DeformationStats deformation_bound_sample(double a, double r, const HalfPlaneDomain& dom,
                                                 std::int64_t n_samples, std::uint64_t seed) {
    if (n_samples <= 0) throw DomainError("empty sample");
    CounterRng rw(seed, 11), rl(seed, 12), rd(seed, 13), rk(seed, 14);
    DeformationStats st;
    double h = 1e-6 * r;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        auto ui = static_cast<std::uint64_t>(i);
        cplx w1 = dom.sample(rw, ui);
        int k = static_cast<int>(rk.bits(ui) % (2 * kSampleBranches + 1)) - kSampleBranches;
        cplx shift(0.0, kTwoPi * k);
        cplx lam1 = a + r * rl.unit_disk(2 * ui);
        cplx lam2 = a + 0.5 * r * rl.unit_disk(2 * ui + 1);
        if (r > 0.0) {
            cplx dz = (std::log(w1 / (lam1 + h)) - std::log(w1 / (lam1 - h))) / (2.0 * h);
            if (!std::isfinite(std::abs(dz))) throw ComputationError("non-finite branch derivative");
            st.D_hat = std::max(st.D_hat, std::abs(dz));
        }
        // f'(z) = f(z) = w, so the ratio of derivatives is w1/w2
        cplx w2 = w1 + dom.delta * rd.unit_disk(ui);
        cplx z1 = std::log(w1 / lam1) + shift;
        cplx z2 = std::log(w2 / lam2) + shift;
        cplx ratio = (lam1 * std::exp(z1)) / (lam2 * std::exp(z2));
        if (!std::isfinite(std::abs(ratio))) throw ComputationError("non-finite derivative ratio");
        st.A_hat = std::max(st.A_hat, std::abs(std::arg(ratio)));
    }
    return st;
}

struct GrowthStats {
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;
};

// |f'(z)| / (1+|f(z)|^2)^{1/2} over sampled z in the preimage of the box
inline GrowthStats balanced_growth_check(const ExpParameter& p, const HalfPlaneDomain& dom,
                                         std::int64_t n_samples, std::uint64_t seed) {
    if (n_samples <= 0) throw DomainError("empty sample");
    CounterRng rw(seed, 21), rk(seed, 22);
    GrowthStats st;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        auto ui = static_cast<std::uint64_t>(i);
        cplx w = dom.sample(rw, ui);
        int k = static_cast<int>(rk.bits(ui) % (2 * kSampleBranches + 1)) - kSampleBranches;
        cplx z = std::log(w / p.eta) + cplx(0.0, kTwoPi * k);
        cplx fz = p.eta * std::exp(z);
        double ratio = std::abs(fz) / std::sqrt(1.0 + std::norm(fz));
        st.min_ratio = std::min(st.min_ratio, ratio);
        st.max_ratio = std::max(st.max_ratio, ratio);
    }
    return st;
}

// min over sampled backward orbits of |(f^n)'|^{1/n}.  The orbit from w
// uses etas[n-1] first and etas[0] last, so f_{eta_n} o ... o f_{eta_1}
// maps the endpoint back to w.
inline double expansion_floor_sample(std::span<const ExpParameter> etas, const HalfPlaneDomain& dom, int depth,
                                     std::int64_t n_samples, std::uint64_t seed) {
    if (depth < 1 || static_cast<std::size_t>(depth) > etas.size()) throw DomainError("bad expansion depth");
    if (n_samples <= 0) throw DomainError("empty sample");
    CounterRng rw(seed, 31), rk(seed, 32);
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < n_samples; ++i) {
        auto ui = static_cast<std::uint64_t>(i);
        cplx w = dom.sample(rw, ui);
        double log_deriv = 0.0;
        for (int d = depth - 1; d >= 0; --d) {
            log_deriv += std::log(std::abs(w));
            int k = static_cast<int>(rk.bits(ui * 64 + static_cast<std::uint64_t>(d)) % 5) - 2;
            w = std::log(w / etas[static_cast<std::size_t>(d)].eta) + cplx(0.0, kTwoPi * k);
        }
        best = std::min(best, std::exp(log_deriv / depth));
    }
    return best;
}

}  // namespace hdexp
