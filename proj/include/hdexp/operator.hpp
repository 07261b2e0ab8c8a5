#pragma once

#include "config.hpp"
#include "expfamily.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace hdexp {

// Nodes of the profile grid.  A point z of U is addressed by
// s = log1p(log|z|) and mu = tan(arg z / 2) in [-1, 1]; the set
// {log|z| >= 0, |arg z| <= pi/2} contains U and is mapped into itself by
// every inverse branch, so no preimage ever leaves the grid's domain.
// mu = Im z / (Re z + |z|) needs no arctangent.  The s spacing is adjusted
// so that the base point lands on a node.
struct ProfileGrid {
    int n_s = 0;
    int n_phi = 0;
    double s_max = 0.0;
    double ds = 0.0;
    double dmu = 0.0;

    static ProfileGrid make(int n_s, int n_phi, double s_max, double xi0) {
        if (n_s < 8 || n_phi < 5) throw DomainError("profile grid too coarse (need n_s >= 8, n_phi >= 5)");
        if (n_phi % 2 == 0) ++n_phi;  // keep arg z = 0 on a node
        if (!(xi0 > 1.0)) throw DomainError("base point must lie in U");
        ProfileGrid g;
        g.n_s = n_s;
        g.n_phi = n_phi;
        double s_xi = std::log1p(std::log(xi0));
        double ds = s_max / (n_s - 1);
        double m = std::max(1.0, std::round(s_xi / ds));
        g.ds = s_xi / m;
        g.s_max = g.ds * (n_s - 1);
        g.dmu = 2.0 / (n_phi - 1);
        return g;
    }
    static ProfileGrid make(const EngineConfig& cfg) { return make(cfg.n_s, cfg.n_phi, cfg.s_max, cfg.xi0); }

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(n_s) * static_cast<std::size_t>(n_phi); }
    [[nodiscard]] double s(int i) const { return i * ds; }
    [[nodiscard]] double rho(int i) const { return std::expm1(s(i)); }
    [[nodiscard]] double mu(int j) const { return -1.0 + j * dmu; }
    [[nodiscard]] double phi(int j) const { return 2.0 * std::atan(mu(j)); }
    [[nodiscard]] cplx point(int i, int j) const { return std::polar(std::exp(rho(i)), phi(j)); }
    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_phi) + static_cast<std::size_t>(j);
    }
    bool operator==(const ProfileGrid&) const = default;
};

namespace detail {

inline void lagrange4(double u, double* c) {
    // nodes at -1, 0, 1, 2
    c[0] = -u * (u - 1.0) * (u - 2.0) / 6.0;
    c[1] = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    c[2] = -(u + 1.0) * u * (u - 2.0) / 2.0;
    c[3] = (u + 1.0) * u * (u - 1.0) / 6.0;
}

// log(1 + e^{2 lm}) without overflow
inline double log1p_exp2(double lm) { return lm > 20.0 ? 2.0 * lm + std::exp(-2.0 * lm) : std::log1p(std::exp(2.0 * lm)); }

}  // namespace detail

// g(z) = A(z) q(z) with A(z) = |z|^{-t} (1+|z|^2)^{tau t / 2}.  The factor A
// is the reciprocal of the potential's coboundary term, so the transfer
// operator acts on the smooth profile q through the plain weights |z_k|^{-t}.
//
// q is stored at the grid nodes and read back as
//     q(x) = R(x) * bilinear(q_i / R_i)(x)
// where R is a positive reference profile interpolated by 4x4 Lagrange in
// log space.  For a fixed reference this is a positive combination of the
// nodal values, so the operator is linear, positive and monotone in the
// values; when the reference is the function itself the read-back is
// log-cubic and fourth-order accurate.  Beyond s_max, log q continues
// linearly in s with slope -tail_exponent.
struct GridFunction {
    ProfileGrid grid;
    double t = 0.0;
    double tau = 0.0;
    double tail_exponent = 0.0;
    bool is_constant = false;
    bool mirror_symmetric = false;  // q(s, -mu) = q(s, mu) holds exactly at the nodes
    double constant_value = 0.0;
    std::vector<double> values;
    std::vector<double> log_ref;
    std::vector<double> ratio;  // values / ref; empty when the reference is the function itself

    static GridFunction constant(const ProfileGrid& grid, double c) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("constant must be finite and nonnegative");
        GridFunction g;
        g.grid = grid;
        g.is_constant = true;
        g.mirror_symmetric = true;
        g.constant_value = c;
        return g;
    }

    // Profile q given at the nodes; the reference is q itself when q > 0
    // everywhere and otherwise the unit profile.
    static GridFunction from_profile(const ProfileGrid& grid, double t, double tau, double tail_exponent,
                                     std::vector<double> q) {
        GridFunction g;
        g.grid = grid;
        g.t = t;
        g.tau = tau;
        g.tail_exponent = tail_exponent;
        g.values = std::move(q);
        g.check_values();
        g.self_reference();
        g.mirror_symmetric = g.detect_symmetry();
        return g;
    }

    // Profile q read back against the reference of `like`.
    static GridFunction with_reference(const GridFunction& like, std::vector<double> q) {
        if (like.is_constant) throw DomainError("reference must be a profile");
        GridFunction g = like;
        g.values = std::move(q);
        g.check_values();
        g.ratio.resize(g.values.size());
        for (std::size_t n = 0; n < g.values.size(); ++n) g.ratio[n] = g.values[n] * std::exp(-g.log_ref[n]);
        g.mirror_symmetric = g.detect_symmetry();
        return g;
    }

    [[nodiscard]] double log_prefactor(double lm) const {
        return -t * lm + 0.5 * tau * t * detail::log1p_exp2(lm);
    }

    // log q at (log|z|, tan(arg z / 2)); -inf where q = 0
    [[nodiscard]] double log_profile(double lm, double mu) const {
        double s = std::log1p(std::max(lm, 0.0));
        double ext = 0.0;
        if (s > grid.s_max) {
            ext = -tail_exponent * (s - grid.s_max);
            s = grid.s_max;
        }
        double a = s / grid.ds;
        int i = std::min(static_cast<int>(a), grid.n_s - 2);
        int i0 = std::clamp(i - 1, 0, grid.n_s - 4);
        double b = (std::clamp(mu, -1.0, 1.0) + 1.0) / grid.dmu;
        int j = std::min(static_cast<int>(b), grid.n_phi - 2);
        int j0 = std::clamp(j - 1, 0, grid.n_phi - 4);
        double cs[4], cf[4];
        detail::lagrange4(a - i0 - 1, cs);
        detail::lagrange4(b - j0 - 1, cf);
        double L = 0.0;
        for (int r = 0; r < 4; ++r) {
            const double* row = &log_ref[grid.index(i0 + r, j0)];
            L += cs[r] * (cf[0] * row[0] + cf[1] * row[1] + cf[2] * row[2] + cf[3] * row[3]);
        }
        if (!ratio.empty()) {
            double u = a - i, v = b - j;
            const double* r0 = &ratio[grid.index(i, j)];
            const double* r1 = &ratio[grid.index(i + 1, j)];
            double R = (1.0 - u) * ((1.0 - v) * r0[0] + v * r0[1]) + u * ((1.0 - v) * r1[0] + v * r1[1]);
            if (!(R > 0.0)) return -std::numeric_limits<double>::infinity();
            L += std::log(R);
        }
        return L + ext;
    }

    [[nodiscard]] double node_value(int i, int j) const {
        if (is_constant) return constant_value;
        return values[grid.index(i, j)] * std::exp(log_prefactor(grid.rho(i)));
    }

    // values scaled by c (c > 0 keeps the reference valid)
    void scale(double c) {
        if (is_constant) {
            constant_value *= c;
            return;
        }
        for (auto& v : values) v *= c;
        if (ratio.empty()) {
            double lc = std::log(c);
            for (auto& l : log_ref) l += lc;
        } else {
            for (auto& r : ratio) r *= c;
        }
    }

    // CSV dump: header line, geometry line, then one row of q per s node.
    void write_csv(std::ostream& os) const {
        os.precision(17);
        os << "# hdexp grid-function v1\n";
        os << "n_s,n_phi,s_max,t,tau,tail_exponent,constant\n";
        os << grid.n_s << ',' << grid.n_phi << ',' << grid.s_max << ',' << t << ',' << tau << ','
           << tail_exponent << ',' << (is_constant ? constant_value : -1.0) << '\n';
        if (is_constant) return;
        for (int i = 0; i < grid.n_s; ++i) {
            for (int j = 0; j < grid.n_phi; ++j) os << (j ? "," : "") << values[grid.index(i, j)];
            os << '\n';
        }
    }

    static GridFunction read_csv(std::istream& is, double xi0) {
        std::string line;
        std::getline(is, line);
        if (line.rfind("# hdexp grid-function v1", 0) != 0) throw DomainError("not a grid-function dump");
        std::getline(is, line);
        std::getline(is, line);
        for (auto& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream hs(line);
        int n_s = 0, n_phi = 0;
        double s_max = 0, t = 0, tau = 0, tail = 0, c = 0;
        hs >> n_s >> n_phi >> s_max >> t >> tau >> tail >> c;
        if (!hs) throw DomainError("bad grid-function header");
        ProfileGrid grid = ProfileGrid::make(n_s, n_phi, s_max, xi0);
        if (grid.n_s != n_s || grid.n_phi != n_phi || std::abs(grid.s_max - s_max) > 1e-12 * s_max)
            throw DomainError("grid-function geometry does not match the base point");
        if (c >= 0.0) return constant(grid, c);
        std::vector<double> q;
        q.reserve(grid.size());
        while (std::getline(is, line)) {
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) q.push_back(std::stod(cell));
        }
        if (q.size() != grid.size()) throw DomainError("grid-function dump has wrong value count");
        return from_profile(grid, t, tau, tail, std::move(q));
    }

private:
    void check_values() const {
        if (values.size() != grid.size()) throw DomainError("profile size does not match grid");
        for (double v : values)
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("profile values must be finite and nonnegative");
    }

    [[nodiscard]] bool detect_symmetry() const {
        for (int i = 0; i < grid.n_s; ++i)
            for (int j = 0; j < grid.n_phi / 2; ++j) {
                std::size_t a = grid.index(i, j), b = grid.index(i, grid.n_phi - 1 - j);
                if (values[a] != values[b] || log_ref[a] != log_ref[b]) return false;
                if (!ratio.empty() && ratio[a] != ratio[b]) return false;
            }
        return true;
    }

    void self_reference() {
        log_ref.resize(values.size());
        bool positive = std::all_of(values.begin(), values.end(), [](double v) { return v > 0.0; });
        if (positive) {
            for (std::size_t n = 0; n < values.size(); ++n) log_ref[n] = std::log(values[n]);
            ratio.clear();
        } else {
            std::fill(log_ref.begin(), log_ref.end(), 0.0);
            ratio = values;
        }
    }
};

// g(z) for z in U.
inline double eval(const GridFunction& g, cplx z) {
    if (!(z.real() >= 1.0)) throw DomainError("eval: Re z < 1 lies outside U");
    if (g.is_constant) return g.constant_value;
    double r = std::abs(z);
    return std::exp(g.log_prefactor(std::log(r)) + g.log_profile(std::log(r), z.imag() / (z.real() + r)));
}

struct BasePointFunctional {
    cplx xi0{2.0, 0.0};
    double operator()(const GridFunction& g) const { return eval(g, xi0); }
};

// Discretization of the transfer operator.  Each node sums the explicit
// branches |k| <= k_head and the two tails u > k_head + 1/2 by
// Gauss-Laguerre in log u, which leaves every weight positive.
class TransferOperator {
public:
    TransferOperator() : TransferOperator(EngineConfig{}) {}
    explicit TransferOperator(const EngineConfig& cfg)
        : grid_(ProfileGrid::make(cfg)), k_head_(cfg.k_head), rule_(gauss_laguerre(cfg.n_tail)) {
        if (cfg.k_head < 1) throw DomainError("k_head must be at least 1");
        for (int i = 0; i < grid_.n_s; ++i) rho_.push_back(grid_.rho(i));
        for (int j = 0; j < grid_.n_phi; ++j) phi_.push_back(grid_.phi(j));
    }

    [[nodiscard]] const ProfileGrid& grid() const { return grid_; }
    [[nodiscard]] GridFunction one() const { return GridFunction::constant(grid_, 1.0); }

    [[nodiscard]] GridFunction apply(const ExpParameter& p, const Potential& pot, const GridFunction& g) const {
        if (!(g.grid == grid_)) throw DomainError("grid function belongs to a different grid");
        const double tt = pot.tau * pot.t;
        // log of the summand at a preimage z: log B(z) + log g(z)
        double gamma;  // decay exponent of the summand in |z|
        if (g.is_constant) gamma = tt;
        else gamma = tt + g.t - g.tau * g.t;
        if (!(gamma > 1.0)) throw DomainError("preimage series diverges");
        const bool same = !g.is_constant && g.t == pot.t && g.tau == pot.tau;
        const double log_c = g.is_constant ? (g.constant_value > 0 ? std::log(g.constant_value) : -INFINITY) : 0.0;
        auto summand = [&](double lm, double mu) {
            if (g.is_constant) return log_c - 0.5 * tt * detail::log1p_exp2(lm);
            double lq = g.log_profile(lm, mu);
            if (same) return -pot.t * lm + lq;
            double l1 = detail::log1p_exp2(lm);
            return -0.5 * tt * l1 + g.log_prefactor(lm) + lq;
        };

        const double log_abs_eta = std::log(std::abs(p.eta));
        const double arg_eta = std::arg(p.eta);
        const double a0 = k_head_ + 0.5;
        const double a = a0 + gamma / (24.0 * a0);  // absorbs the midpoint-rule correction
        const double beta = gamma - 1.0;
        const double log2pi = std::log(kTwoPi);
        // Tail nodes in l = log(2 pi u).  The summand behaves like
        // e^{-beta l} l^{-kappa} times a slowly varying factor, where kappa is
        // the input's own decay in log|z|; the substitution
        //   x = beta (l - l_a) + kappa log(l / l_a)
        // turns that model into e^{-x}, so Gauss-Laguerre sees a smooth ratio.
        const double kappa = g.is_constant ? 0.0 : std::max(g.tail_exponent, 0.0);
        const double l_a = log2pi + std::log(a);
        const std::size_t nq = rule_.x.size();
        std::vector<double> logu(nq), coef(nq);
        for (std::size_t q = 0; q < nq; ++q) {
            double x = rule_.x[q];
            double l = l_a + x / (beta + kappa / l_a);
            for (int it = 0; it < 60; ++it) {
                double f = beta * (l - l_a) + kappa * std::log(l / l_a) - x;
                double step = f / (beta + kappa / l);
                l -= step;
                if (std::abs(step) < 1e-14 * l) break;
            }
            logu[q] = l - log2pi;
            coef[q] = rule_.w[q] / (beta + kappa / l);
        }

        // real eta maps mirror-symmetric input to mirror-symmetric output;
        // then only the upper half of each row is summed
        const bool mirror = g.mirror_symmetric && p.eta.imag() == 0.0;
        const int j_first = mirror ? grid_.n_phi / 2 : 0;
        std::vector<double> out(grid_.size());
        parallel_for(static_cast<std::size_t>(grid_.n_s), [&](std::size_t row) {
            int i = static_cast<int>(row);
            double X = rho_[row] - log_abs_eta;
            for (int j = j_first; j < grid_.n_phi; ++j) {
                double theta = phi_[static_cast<std::size_t>(j)] - arg_eta;
                double sum = 0.0;
                for (int k = -k_head_; k <= k_head_; ++k) {
                    double Y = theta + kTwoPi * k;
                    double r = std::sqrt(X * X + Y * Y);
                    sum += std::exp(summand(std::log(r), Y / (X + r)));
                }
                for (int sgn = -1; sgn <= 1; sgn += 2) {
                    double tail = 0.0;
                    for (std::size_t q = 0; q < nq; ++q) {
                        double lm, mu;
                        if (logu[q] < 30.0) {
                            double Y = theta + sgn * kTwoPi * std::exp(logu[q]);
                            double r = std::sqrt(X * X + Y * Y);
                            lm = std::log(r);
                            mu = Y / (X + r);
                        } else {
                            lm = log2pi + logu[q];
                            mu = sgn;
                        }
                        tail += coef[q] * std::exp(summand(lm, mu) + logu[q] + rule_.x[q]);
                    }
                    sum += tail;
                }
                out[grid_.index(i, j)] = sum;
                if (mirror) out[grid_.index(i, grid_.n_phi - 1 - j)] = sum;
            }
        });
        for (double v : out)
            if (!std::isfinite(v) || v < 0.0) throw ComputationError("transfer operator produced a non-finite value");
        return GridFunction::from_profile(grid_, pot.t, pot.tau, gamma - 1.0, std::move(out));
    }

private:
    ProfileGrid grid_;
    int k_head_;
    QuadratureRule rule_;
    std::vector<double> rho_, phi_;
};

inline GridFunction apply_transfer(const ExpParameter& p, const Potential& pot, const GridFunction& g,
                                   const EngineConfig& cfg = {}) {
    return TransferOperator(cfg).apply(p, pot, g);
}

struct NormalizedIterationState {
    GridFunction g;
    std::vector<double> step_logs;
    std::int64_t step_index = 0;
};

inline NormalizedIterationState initial_state(const TransferOperator& op, const BasePointFunctional& l) {
    GridFunction one = op.one();
    double l1 = l(one);
    one.scale(1.0 / l1);
    return {std::move(one), {}, 0};
}

// h = L g, record log l(h), continue with h / l(h).
inline void normalized_step(NormalizedIterationState& st, const TransferOperator& op, const ExpParameter& p,
                            const Potential& pot, const BasePointFunctional& l) {
    GridFunction h = op.apply(p, pot, st.g);
    double lh = l(h);
    if (!(lh > 0.0) || !std::isfinite(lh)) {
        std::ostringstream os;
        os << "positivity lost at step " << st.step_index << ": l(L g) = " << lh;
        throw ComputationError(os.str());
    }
    st.step_logs.push_back(std::log(lh));
    h.scale(1.0 / lh);
    st.g = std::move(h);
    ++st.step_index;
}

inline NormalizedIterationState normalized_step(NormalizedIterationState st, const ExpParameter& p,
                                                const Potential& pot, const BasePointFunctional& l,
                                                const EngineConfig& cfg = {}) {
    normalized_step(st, TransferOperator(cfg), p, pot, l);
    return st;
}

// sup over grid nodes inside U of |g1 - g2|
inline double sup_distance(const GridFunction& g1, const GridFunction& g2) {
    const ProfileGrid& gr = g1.grid;
    double d = 0.0;
    for (int i = 0; i < gr.n_s; ++i)
        for (int j = 0; j < gr.n_phi; ++j) {
            if (gr.point(i, j).real() < 1.0) continue;
            d = std::max(d, std::abs(g1.node_value(i, j) - g2.node_value(i, j)));
        }
    return d;
}

inline double sup_value(const GridFunction& g) {
    const ProfileGrid& gr = g.grid;
    double m = 0.0;
    for (int i = 0; i < gr.n_s; ++i)
        for (int j = 0; j < gr.n_phi; ++j)
            if (gr.point(i, j).real() >= 1.0) m = std::max(m, g.node_value(i, j));
    return m;
}

struct ConvergenceReport {
    std::vector<double> d;  // d[m-1] = sup-distance between pullbacks of depth m and 2m
    double theta_hat = 0.0;
    double r_squared = 0.0;
    [[nodiscard]] bool nonincreasing_after(std::size_t burn) const {
        for (std::size_t m = burn + 1; m < d.size(); ++m)
            if (d[m] > d[m - 1]) return false;
        return true;
    }
};

// Pullback iterates ending at a common fiber index: depth m starts from 1 at
// index end - m.  Their Cauchy differences measure the speed at which
// normalized iterates forget the starting function.
inline ConvergenceReport density_convergence_diagnostic(std::span<const ExpParameter> etas, const Potential& pot,
                                                        const BasePointFunctional& l, int n_probe,
                                                        const EngineConfig& cfg = {}) {
    if (n_probe < 8) throw DomainError("n_probe must be at least 8");
    const std::size_t end = static_cast<std::size_t>(2 * n_probe);
    if (etas.size() < end) throw DomainError("fiber too short for the convergence diagnostic");
    TransferOperator op(cfg);
    std::vector<GridFunction> pull(end + 1);
    for (std::size_t depth = 1; depth <= end; ++depth) {
        NormalizedIterationState st = initial_state(op, l);
        for (std::size_t k = end - depth; k < end; ++k) normalized_step(st, op, etas[k], pot, l);
        pull[depth] = std::move(st.g);
    }
    ConvergenceReport rep;
    for (int m = 1; m <= n_probe; ++m)
        rep.d.push_back(sup_distance(pull[static_cast<std::size_t>(m)], pull[static_cast<std::size_t>(2 * m)]));
    // least squares of log d_m against m over the entries above round-off
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (int m = 1; m <= n_probe; ++m) {
        double dm = rep.d[static_cast<std::size_t>(m - 1)];
        if (!(dm > 1e-13)) continue;
        double y = std::log(dm);
        sx += m;
        sy += y;
        sxx += double(m) * m;
        sxy += m * y;
        syy += y * y;
        ++n;
    }
    if (n >= 3) {
        double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
        double slope = cxy / vx;
        rep.theta_hat = std::exp(slope);
        rep.r_squared = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
    }
    return rep;
}

}  // namespace hdexp
