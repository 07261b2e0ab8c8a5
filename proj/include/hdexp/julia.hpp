#pragma once

#include "config.hpp"
#include "expfamily.hpp"
#include "parallel.hpp"
#include "randomdriver.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace hdexp {

struct JuliaSample {
    std::shared_ptr<const FiberSequence> fiber;
    std::vector<cplx> seeds;   // starting points near xi0, one per point
    std::vector<cplx> points;  // f_{eta_1}^{-1} o ... o f_{eta_depth}^{-1}(seed)
    int depth = 0;
    double bound_M = 0.0;  // largest |z| met along the backward orbits
};

struct RoundTrip {
    double max_residual = 0.0;  // over points whose rounding bound is below delta
    double max_growth = 0.0;    // largest rounding bound eps |z| prod |f'| met along an orbit
    std::int64_t checked = 0;
    std::int64_t unchecked = 0;  // points whose rounding bound exceeds delta
};

namespace detail {

// cumulative branch weights for |k| <= K at w
inline int draw_branch(const ExpParameter& p, const Potential& pot, cplx w, int K, double u,
                       std::vector<double>& cdf) {
    cplx base = std::log(w / p.eta);
    cdf.resize(static_cast<std::size_t>(2 * K + 1));
    double acc = 0.0;
    for (int k = -K; k <= K; ++k) {
        acc += weight(pot, base + cplx(0.0, kTwoPi * k), w);
        cdf[static_cast<std::size_t>(k + K)] = acc;
    }
    double target = u * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    auto idx = std::min<std::ptrdiff_t>(it - cdf.begin(), 2 * K);
    return static_cast<int>(idx) - K;
}

}  // namespace detail

// Backward orbits from seeds in D(xi0, delta).  Branch k is drawn with
// probability proportional to the t = julia_t potential weight among
// |k| <= min(truncation_order(eps = julia_eps), julia_k_cap).
inline JuliaSample backward_orbit_sample(std::shared_ptr<const FiberSequence> fiber, std::int64_t n_points,
                                         int depth, std::uint64_t seed, const EngineConfig& cfg) {
    if (depth < 0) throw DomainError("depth must be nonnegative");
    if (fiber->size() < static_cast<std::size_t>(depth)) throw DomainError("fiber shorter than the depth");
    if (n_points < 1) throw DomainError("need at least one point");
    const Potential pot = Potential::make(cfg.julia_t, tau_schedule(cfg.julia_t, cfg));
    const cplx xi0(cfg.xi0, 0.0);
    CounterRng rs(seed, 41), rb(seed, 42);

    JuliaSample js;
    js.fiber = fiber;
    js.depth = depth;
    js.seeds.resize(static_cast<std::size_t>(n_points));
    js.points.resize(static_cast<std::size_t>(n_points));
    std::vector<double> bound(static_cast<std::size_t>(n_points), 0.0);
    parallel_for(static_cast<std::size_t>(n_points), [&](std::size_t i) {
        std::vector<double> cdf;
        cplx w = xi0 + cfg.delta * rs.unit_disk(i);
        js.seeds[i] = w;
        double m = std::abs(w);
        for (int d = depth; d >= 1; --d) {
            const ExpParameter& p = fiber->etas[static_cast<std::size_t>(d - 1)];
            // the cap usually binds; test it before searching for the order
            const double z0 = std::abs(std::log(w / p.eta));
            int K = cfg.julia_k_cap;
            if (detail::relative_tail_bound(0.5 * pot.tau * pot.t, K, z0) < cfg.julia_eps)
                K = static_cast<int>(truncation_order_real(p, pot, w, cfg.julia_eps));
            double u = rb.uniform(i * static_cast<std::uint64_t>(depth + 1) + static_cast<std::uint64_t>(d));
            int k = detail::draw_branch(p, pot, w, K, u, cdf);
            w = std::log(w / p.eta) + cplx(0.0, kTwoPi * k);
            m = std::max(m, std::abs(w));
        }
        js.points[i] = w;
        bound[i] = m;
    });
    js.bound_M = *std::max_element(bound.begin(), bound.end());
    return js;
}

// Forward iteration of every point back to its seed.  Rounding is amplified
// by |f'| = |f| at each step; points whose amplified rounding exceeds delta
// are counted but not held to the delta bound.
inline RoundTrip round_trip(const JuliaSample& js, double delta) {
    RoundTrip rt;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 0; i < js.points.size(); ++i) {
        cplx z = js.points[i];
        double growth = 4.0 * eps * std::max(1.0, std::abs(z));
        // the linear model stops holding once the error is O(1); later
        // contraction near the attracting basin must not hide that
        double peak = growth;
        for (int d = 1; d <= js.depth; ++d) {
            z = js.fiber->etas[static_cast<std::size_t>(d - 1)].eta * std::exp(z);
            growth = growth * std::abs(z) + 4.0 * eps * std::abs(z);
            peak = std::max(peak, growth);
        }
        growth = peak;
        rt.max_growth = std::max(rt.max_growth, growth);
        double res = std::abs(z - js.seeds[i]);
        if (growth < delta) {
            ++rt.checked;
            rt.max_residual = std::max(rt.max_residual, res);
        } else {
            ++rt.unchecked;
        }
    }
    return rt;
}

struct Window {
    double re_min = 1.0, re_max = 5.0;
    double im_min = -10.0, im_max = 10.0;
};

struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint64_t> counts;  // row 0 is the top (largest Im)
    [[nodiscard]] std::uint64_t total() const {
        std::uint64_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }
    [[nodiscard]] std::int64_t nonzero() const {
        return std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c != 0; });
    }

    // P5 bytes; gray level log(1 + c) / log(1 + c_max)
    [[nodiscard]] std::string pgm(const std::string& comment = {}) const {
        std::string out = "P5\n";
        if (!comment.empty()) out += "# " + comment + "\n";
        out += std::to_string(width) + " " + std::to_string(height) + "\n255\n";
        std::uint64_t cmax = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
        double norm = cmax ? std::log1p(double(cmax)) : 1.0;
        for (auto c : counts) {
            double g = c ? 255.0 * std::log1p(double(c)) / norm : 0.0;
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::max(g, c ? 1.0 : 0.0)))));
        }
        return out;
    }
};

inline Raster rasterize(const JuliaSample& js, const Window& win, int width, int height) {
    if (js.points.empty()) throw DomainError("empty sample");
    if (!(win.re_max > win.re_min && win.im_max > win.im_min)) throw DomainError("empty window");
    if (width < 1 || height < 1) throw DomainError("resolution must be positive");
    Raster r;
    r.width = width;
    r.height = height;
    r.counts.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
    for (cplx z : js.points) {
        double u = (z.real() - win.re_min) / (win.re_max - win.re_min);
        double v = (win.im_max - z.imag()) / (win.im_max - win.im_min);
        if (!(u >= 0.0 && u < 1.0 && v >= 0.0 && v < 1.0)) continue;
        auto col = static_cast<std::size_t>(u * width), row = static_cast<std::size_t>(v * height);
        ++r.counts[row * static_cast<std::size_t>(width) + col];
    }
    return r;
}

}  // namespace hdexp
