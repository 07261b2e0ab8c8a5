#pragma once

#include "config.hpp"
#include "expfamily.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "randomdriver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

namespace hdexp {

// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double x) {
        double t = s_ + x;
        c_ += std::abs(s_) >= std::abs(x) ? (s_ - t) + x : (x - t) + s_;
        s_ = t;
    }
    void add(const CompensatedSum& o) {
        add(o.s_);
        add(o.c_);
    }
    [[nodiscard]] double value() const { return s_ + c_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

struct TreePressure {
    cplx w0{};
    int n = 0;
    double log_value = 0.0;          // log of the kept mass
    double pruned_mass_bound = 0.0;  // absolute, sound upper bound on the pruned mass
    std::int64_t nodes_expanded = 0;
    double log_threshold = 0.0;  // pruning threshold of the final pass
    int passes = 0;

    [[nodiscard]] double relative_pruned() const { return pruned_mass_bound * std::exp(-log_value); }
};

struct BudgetExceeded : ComputationError {
    BudgetExceeded(const std::string& what, TreePressure partial) : ComputationError(what), partial(partial) {}
    TreePressure partial;
};

struct TreeOptions {
    double rel_tol = 1e-4;
    std::int64_t budget = 100'000'000;
    int k_head = 2;  // explicit branches per inner node
    int n_tail = 3;  // Gauss-Legendre nodes per tail side
    // the last level only feeds a one-level sum, so it can afford more
    int leaf_k_head = 6;
    int leaf_n_tail = 8;
    // Finite mode: exactly the branches |k| <= k_finite, no tails.
    std::optional<int> k_finite;
    // Fixed pruning threshold (log, absolute); skips the adaptive passes.
    std::optional<double> log_threshold;

    static TreeOptions from(const EngineConfig& cfg) {
        TreeOptions o;
        o.rel_tol = cfg.oracle_rel_tol;
        o.budget = cfg.oracle_budget;
        o.k_head = cfg.oracle_k_head;
        o.n_tail = cfg.oracle_n_tail;
        o.leaf_k_head = cfg.oracle_leaf_k_head;
        o.leaf_n_tail = cfg.oracle_leaf_n_tail;
        return o;
    }
};

namespace detail {

// Expansion of L_{eta_n} o ... o L_{eta_1} 1 (w0) over inverse-branch chains.
// Level 0 (the root) uses the last parameter of the prefix.
class TreeExpander {
public:
    struct Child {
        double log_coef;
        double x, y;  // the preimage z = x + iy
    };
    struct Partial {
        CompensatedSum kept, pruned;
    };
    struct BudgetSignal {};

    TreeExpander(std::span<const ExpParameter> prefix, const Potential& pot, int n, const TreeOptions& opt)
        : etas_(prefix.begin(), prefix.begin() + n), pot_(pot), n_(n), opt_(opt), s_(0.5 * pot.tau * pot.t),
          K_(opt.k_finite ? *opt.k_finite : opt.k_head),
          K_leaf_(opt.k_finite ? *opt.k_finite : opt.leaf_k_head) {
        double emax = 0.0;
        for (const auto& p : etas_) emax = std::max(emax, std::abs(p.eta));
        log_eta_max_ = std::log(emax);
        // every non-root node z has |z| >= Re z >= log|w| - log|eta| >= -log(eta_max) > 1
        rho_min_ = -log_eta_max_;
        // the level bound is decreasing in rho; tabulate it on a geometric grid
        // and read it at the grid point below the argument
        for (int i = 0; i < kTable; ++i) table_.push_back(log_level_bound(rho_min_ * std::exp(i * kTableStep)));
        if (!opt.k_finite) {
            // branch mass decays like u^{-tau t} at the last level and like
            // u^{-t} (c + log u)^{-kappa} above it, where c ~ -log|eta| is the
            // real part gained by the next inverse branch and kappa is tau t - 1
            // one level up and t - 1 beyond
            tails_[0] = tail_nodes(gauss_legendre01(opt.leaf_n_tail), 2.0 * s_, 0.0, 0.0, K_leaf_);
            tails_[1] = tail_nodes(gauss_legendre01(opt.n_tail), pot.t, 2.0 * s_ - 1.0, rho_min_, K_);
            tails_[2] = tail_nodes(gauss_legendre01(opt.n_tail), pot.t, pot.t - 1.0, rho_min_, K_);
        }
    }

    // log of a bound on the one-level sum at any w with |w| >= rho.  The
    // bound with cutoff K also covers every larger cutoff.
    [[nodiscard]] double log_level_bound(double rho) const {
        double X = std::max(0.0, std::log(rho) - log_eta_max_);
        double c2 = 1.0 + X * X;
        double sum = 0.0;
        for (int k = -K_; k <= K_; ++k) {
            double d = std::max(0.0, kTwoPi * std::abs(k) - std::numbers::pi);
            sum += std::pow(c2 + d * d, -s_);
        }
        if (!opt_.k_finite) {
            // sum_{k>K} g(k) and the quadrature tail from K + 1/2 are both below
            // int_K^inf g; the factor 1.05 covers quadrature error
            double c = std::sqrt(c2);
            double tail = std::pow(c, 1.0 - 2.0 * s_) / kTwoPi * tail_integral(s_, (kTwoPi * K_ - std::numbers::pi) / c);
            sum += 2.0 * 1.05 * tail;
        }
        return -pot_.t * std::log(rho) + s_ * std::log1p(rho * rho) + std::log(sum);
    }

    // bound on the mass below a node of modulus rho with m operators left:
    // its children have modulus >= log(rho) - log(eta_max), and so on
    [[nodiscard]] double log_subtree_bound(double rho, int m) const {
        double b = 0.0;
        for (int j = 0; j < m; ++j) {
            b += tabulated(rho);
            rho = std::log(rho) - log_eta_max_;
        }
        return b;
    }

    // children of w at level L; sorted heaviest first unless they are leaves
    void children(cplx w, int L, std::vector<Child>& out) const {
        out.clear();
        const ExpParameter& p = etas_[static_cast<std::size_t>(n_ - 1 - L)];
        const cplx base = std::log(w / p.eta);
        const double X = base.real(), Y = base.imag(), X2 = X * X;
        const double aw = std::abs(w);
        const double c0 = -pot_.t * std::log(aw) + s_ * std::log1p(aw * aw);
        const bool leaves = L == n_ - 1;
        const int K = leaves ? K_leaf_ : K_;
        for (int k = -K; k <= K; ++k) {
            double y = Y + kTwoPi * k;
            out.push_back({c0 - s_ * std::log1p(X2 + y * y), X, y});
        }
        if (!opt_.k_finite) {
            const TailNodes& tn = tails_[std::min(n_ - 1 - L, 2)];
            const double a = K + 0.5;
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                // f'(a)/24 from the model |z_u|^{-gamma}, folded into branch K
                double ya = Y + sgn * kTwoPi * a, yK = Y + sgn * kTwoPi * K;
                double za2 = X2 + ya * ya, zK2 = X2 + yK * yK;
                double corr = tn.gamma * std::abs(ya) * kTwoPi / (24.0 * za2) * std::exp(-0.5 * tn.gamma * std::log(za2 / zK2));
                out[static_cast<std::size_t>(K + sgn * K)].log_coef += std::log1p(-std::min(corr, 0.5));
                for (std::size_t q = 0; q < tn.u.size(); ++q) {
                    double y = Y + sgn * kTwoPi * tn.u[q];
                    out.push_back({tn.log_c[q] + c0 - s_ * std::log1p(X2 + y * y), X, y});
                }
            }
        }
        if (!leaves)
            std::stable_sort(out.begin(), out.end(), [](const Child& a, const Child& b) { return a.log_coef > b.log_coef; });
    }

    [[nodiscard]] double log_greedy_chain(cplx w0) const {
        double lp = 0.0;
        cplx w = w0;
        std::vector<Child> buf;
        for (int L = 0; L < n_; ++L) {
            children(w, L, buf);
            auto best = std::max_element(buf.begin(), buf.end(),
                                         [](const Child& a, const Child& b) { return a.log_coef < b.log_coef; });
            lp += best->log_coef;
            w = cplx(best->x, best->y);
        }
        return lp;
    }

    void expand(cplx w, int L, double log_path, double log_thr, double scale, Partial& acc,
                std::atomic<std::int64_t>& nodes, std::vector<std::vector<Child>>& bufs) const {
        if (nodes.fetch_add(1) >= opt_.budget) throw BudgetSignal{};
        std::vector<Child>& ch = bufs[static_cast<std::size_t>(L)];
        children(w, L, ch);
        const int remaining = n_ - L - 1;  // operators still to apply below each child
        if (remaining == 0) {
            CompensatedSum leaf;
            for (const Child& c : ch) leaf.add(std::exp(c.log_coef));
            acc.kept.add(std::exp(log_path - scale) * leaf.value());
            return;
        }
        for (const Child& c : ch) {
            double lp = log_path + c.log_coef;
            double bound = lp + log_subtree_bound(std::hypot(c.x, c.y), remaining);
            if (bound < log_thr) acc.pruned.add(std::exp(bound - scale));
            else expand(cplx(c.x, c.y), L + 1, lp, log_thr, scale, acc, nodes, bufs);
        }
    }

    [[nodiscard]] int depth() const { return n_; }

private:
    static constexpr int kTable = 2048;
    static constexpr double kTableStep = 0.01;

    struct TailNodes {
        double gamma = 0.0;
        std::vector<double> u, log_c;
    };

    // sum_{k > K} f(k) ~ int_{K+1/2}^inf f(u) du + f'(K+1/2)/24.  The integral
    // uses Gauss-Legendre in x = (a/u)^beta ((c+l)/(c+l_a))^{-kappa} with
    // l = log(2 pi u), which maps the model decay to a constant integrand.
    static TailNodes tail_nodes(const QuadratureRule& gl, double gamma, double kappa, double c, int K) {
        TailNodes tn;
        tn.gamma = gamma;
        const double beta = gamma - 1.0;
        const double a = K + 0.5;
        const double l_a = std::log(kTwoPi * a);
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            double target = -std::log(gl.x[q]);
            double l = l_a + target / (beta + kappa / (c + l_a));
            for (int it = 0; it < 100; ++it) {
                double step = (beta * (l - l_a) + kappa * std::log((c + l) / (c + l_a)) - target) / (beta + kappa / (c + l));
                l -= step;
                if (std::abs(step) < 1e-14 * l) break;
            }
            double u = std::exp(l) / kTwoPi;
            // du = u dl and dx = -x (beta + kappa / (c + l)) dl
            tn.u.push_back(u);
            tn.log_c.push_back(std::log(gl.w[q] * u / (gl.x[q] * (beta + kappa / (c + l)))));
        }
        return tn;
    }

    static double tail_integral(double s, double y) { return hdexp::detail::tail_integral(s, y); }

    [[nodiscard]] double tabulated(double rho) const {
        double u = std::log(rho / rho_min_) / kTableStep;
        if (!(u >= 0.0)) return log_level_bound(rho);
        auto i = static_cast<std::size_t>(u);
        return i < table_.size() ? table_[i] : log_level_bound(rho);
    }

    std::vector<ExpParameter> etas_;
    Potential pot_;
    int n_;
    TreeOptions opt_;
    double s_;
    int K_;
    int K_leaf_;
    double log_eta_max_ = 0.0;
    double rho_min_ = 0.0;
    std::vector<double> table_;
    TailNodes tails_[3];
};

}  // namespace detail

// log L^n 1(w0) for the composition L_{eta_n} o ... o L_{eta_1} by depth-first
// expansion of the preimage tree.  A subtree is pruned when its path weight
// times a bound on its remaining mass falls below the threshold; the bounds
// are accumulated into pruned_mass_bound.  Without a fixed threshold the
// first pass prunes at rel_tol times the heaviest single chain and later
// passes lower the threshold until pruned <= rel_tol * kept.
inline TreePressure tree_pressure(std::span<const ExpParameter> prefix, const Potential& pot, cplx w0, int n,
                                  const TreeOptions& opt) {
    if (n < 1) throw DomainError("tree depth must be at least 1");
    if (prefix.size() < static_cast<std::size_t>(n)) throw DomainError("fiber prefix shorter than the depth");
    if (!(pot.t * pot.tau > 1.0)) throw DomainError("series diverges: tau * t <= 1");
    if (opt.k_finite && *opt.k_finite < 0) throw DomainError("k_finite must be nonnegative");
    if (!opt.k_finite && (opt.k_head < 1 || opt.leaf_k_head < opt.k_head || opt.n_tail < 1 || opt.leaf_n_tail < 1))
        throw DomainError("oracle needs 1 <= k_head <= leaf_k_head and positive tail orders");
    double emax = 0.0;
    for (int i = 0; i < n; ++i) emax = std::max(emax, std::abs(prefix[static_cast<std::size_t>(i)].eta));
    if (!(std::abs(w0) >= 1.0 && std::abs(w0) > std::numbers::e * emax))
        throw DomainError("w0 must satisfy |w0| >= 1 and |w0| > e|eta|");

    detail::TreeExpander ex(prefix, pot, n, opt);
    const double scale = ex.log_greedy_chain(w0);
    double log_thr = opt.log_threshold ? *opt.log_threshold : scale + std::log(opt.rel_tol);
    std::vector<detail::TreeExpander::Child> top;
    ex.children(w0, 0, top);

    TreePressure res;
    res.w0 = w0;
    res.n = n;
    for (int pass = 1;; ++pass) {
        std::atomic<std::int64_t> nodes{1};
        std::vector<detail::TreeExpander::Partial> parts(top.size());
        std::atomic<bool> over{false};
        parallel_for(top.size(), [&](std::size_t i) {
            if (over.load()) return;
            const auto& c = top[i];
            auto& acc = parts[i];
            if (n == 1) {
                acc.kept.add(std::exp(c.log_coef - scale));
                return;
            }
            std::vector<std::vector<detail::TreeExpander::Child>> bufs(static_cast<std::size_t>(n));
            try {
                ex.expand(cplx(c.x, c.y), 1, c.log_coef, log_thr, scale, acc, nodes, bufs);
            } catch (const detail::TreeExpander::BudgetSignal&) {
                over.store(true);
            }
        });
        CompensatedSum kept, pruned;
        for (const auto& p : parts) {
            kept.add(p.kept);
            pruned.add(p.pruned);
        }
        res.log_value = std::log(kept.value()) + scale;
        res.pruned_mass_bound = pruned.value() * std::exp(scale);
        res.nodes_expanded = std::min(nodes.load(), opt.budget);
        res.log_threshold = log_thr;
        res.passes = pass;
        if (over.load()) {
            std::ostringstream os;
            os << "oracle node budget " << opt.budget << " exhausted at depth " << n << " (pass " << pass
               << ", kept " << kept.value() * std::exp(scale) << ", pruned bound so far "
               << res.pruned_mass_bound << ")";
            throw BudgetExceeded(os.str(), res);
        }
        double ratio = pruned.value() / kept.value();
        if (opt.log_threshold || ratio <= opt.rel_tol) return res;
        // the pruned mass shrinks roughly like the square root of the threshold
        log_thr -= std::log(std::clamp(std::pow(1.5 * ratio / opt.rel_tol, 2.0), 4.0, 256.0));
    }
}

inline TreePressure tree_pressure(std::span<const ExpParameter> prefix, const Potential& pot, cplx w0, int n,
                                  double rel_tol, const EngineConfig& cfg = {}) {
    TreeOptions opt = TreeOptions::from(cfg);
    opt.rel_tol = rel_tol;
    return tree_pressure(prefix, pot, w0, n, opt);
}

// Exact sum over all (2K+1)^n chains with |k| <= K.
inline double tree_enumerate(std::span<const ExpParameter> prefix, const Potential& pot, cplx w0, int n, int K) {
    if (n < 1 || prefix.size() < static_cast<std::size_t>(n)) throw DomainError("bad enumeration depth");
    CompensatedSum total;
    auto rec = [&](auto&& self, cplx w, int L, double path) -> void {
        const ExpParameter& p = prefix[static_cast<std::size_t>(n - 1 - L)];
        cplx base = std::log(w / p.eta);
        for (int k = -K; k <= K; ++k) {
            cplx z = base + cplx(0.0, kTwoPi * k);
            double wp = path * weight(pot, z, w);
            if (L == n - 1) total.add(wp);
            else self(self, z, L + 1, wp);
        }
    };
    rec(rec, w0, 0, 1.0);
    return total.value();
}

// Bisection on t -> (1/n) log L^n 1(xi0) for the autonomous law.
inline double oracle_bowen(const ParameterLaw& law, const EngineConfig& cfg) {
    if (law.r != 0.0) throw DomainError("oracle_bowen needs r = 0");
    const int n = cfg.oracle_depth;
    std::vector<ExpParameter> prefix(static_cast<std::size_t>(n), ExpParameter::make(cplx(law.a, 0.0), cfg));
    TreeOptions opt = TreeOptions::from(cfg);
    auto P = [&](double t) {
        double tau = tau_schedule(t, cfg);
        if (t * tau < 1.02) throw DomainError("t below 1.02 / tau");
        return tree_pressure(prefix, Potential::make(t, tau), cplx(cfg.xi0, 0.0), n, opt).log_value / n;
    };
    double lo = cfg.t_lo, hi = cfg.t_hi;
    double flo = P(lo), fhi = P(hi);
    if (!(flo > 0.0 && fhi < 0.0)) {
        std::ostringstream os;
        os << "oracle: no sign change on [" << lo << ", " << hi << "] (" << flo << ", " << fhi << ")";
        throw ComputationError(os.str());
    }
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = P(mid);
        if (std::abs(fm) < cfg.oracle_root_tol) return mid;
        if (fm > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace hdexp
