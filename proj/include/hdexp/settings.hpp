#pragma once

#include "config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace hdexp {

// Named access to EngineConfig fields, shared by the config-file reader and
// the CLI flag table.  Names use underscores; '-' is accepted as a synonym.
struct Setting {
    const char* name;
    std::variant<double EngineConfig::*, int EngineConfig::*, std::int64_t EngineConfig::*, bool EngineConfig::*> field;
    const char* help;
};

inline const std::vector<Setting>& settings_table() {
    using C = EngineConfig;
    static const std::vector<Setting> table = {
        {"b_config", &C::b_config, "half-width of the parameter region"},
        {"cert_max_iter", &C::cert_max_iter, "fixed-point certificate iterations"},
        {"cert_tol", &C::cert_tol, "fixed-point certificate tolerance"},
        {"x_max", &C::x_max, "right edge of the sampled half-plane"},
        {"y_max", &C::y_max, "imaginary extent of the sampled half-plane"},
        {"delta", &C::delta, "pairing disk radius"},
        {"delta0", &C::delta0, "upper bound for delta"},
        {"n_s", &C::n_s, "profile nodes in log1p(log|z|)"},
        {"n_phi", &C::n_phi, "profile nodes in the argument"},
        {"s_max", &C::s_max, "largest log1p(log|z|) on the grid"},
        {"k_head", &C::k_head, "explicit branches per node"},
        {"n_tail", &C::n_tail, "quadrature nodes per branch tail"},
        {"eps_tail", &C::eps_tail, "relative tail target"},
        {"disc_tol", &C::disc_tol, "discretization tolerance per step"},
        {"xi0", &C::xi0, "base point"},
        {"steps", &C::steps, "fiber length N"},
        {"burn_in", &C::burn_in, "discarded leading steps"},
        {"batches", &C::batches, "batch count for the standard error"},
        {"t_lo", &C::t_lo, "initial lower bracket"},
        {"t_hi", &C::t_hi, "initial upper bracket"},
        {"t_floor", &C::t_floor, "smallest t tried"},
        {"t_ceil", &C::t_ceil, "largest t tried"},
        {"bisect_width", &C::bisect_width, "bracket width before secant steps"},
        {"root_tol", &C::root_tol, "accepted |EP| at the zero"},
        {"max_polish", &C::max_polish, "secant steps"},
        {"tau_floor", &C::tau_floor, "tau schedule floor"},
        {"tau_numer", &C::tau_numer, "tau schedule numerator"},
        {"per_cell_seed", &C::per_cell_seed, "distinct seed per sweep cell"},
        {"oracle_depth", &C::oracle_depth, "tree depth"},
        {"oracle_rel_tol", &C::oracle_rel_tol, "relative pruned-mass target"},
        {"oracle_budget", &C::oracle_budget, "node budget"},
        {"oracle_k_head", &C::oracle_k_head, "explicit branches at inner nodes"},
        {"oracle_n_tail", &C::oracle_n_tail, "tail nodes at inner nodes"},
        {"oracle_leaf_k_head", &C::oracle_leaf_k_head, "explicit branches at the last level"},
        {"oracle_leaf_n_tail", &C::oracle_leaf_n_tail, "tail nodes at the last level"},
        {"oracle_root_tol", &C::oracle_root_tol, "oracle zero tolerance"},
        {"r_max", &C::r_max, "largest audited spread"},
        {"audit_samples", &C::audit_samples, "samples per audit check"},
        {"expansion_depth", &C::expansion_depth, "composition depth for expansion"},
        {"kappa_max", &C::kappa_max, "pairing contraction threshold"},
        {"m_cap", &C::m_cap, "cap on sup of the iterates"},
        {"decay_eps", &C::decay_eps, "required decay slope"},
        {"r2_min", &C::r2_min, "convergence fit R^2 threshold"},
        {"audit_steps", &C::audit_steps, "steps for the bound check"},
        {"decay_steps", &C::decay_steps, "steps before the decay fit"},
        {"n_probe", &C::n_probe, "probe length for convergence"},
        {"audit_t", &C::audit_t, "t used by the audit"},
        {"audit_tau", &C::audit_tau, "tau used by the audit"},
        {"julia_t", &C::julia_t, "t for branch weights"},
        {"julia_eps", &C::julia_eps, "branch truncation tolerance"},
        {"julia_k_cap", &C::julia_k_cap, "largest branch index"},
    };
    return table;
}

inline std::string normalize_key(std::string_view k) {
    std::string s(k);
    for (auto& c : s)
        if (c == '-') c = '_';
    return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v, std::string_view key) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw DomainError("bad value '" + std::string(v) + "' for " + std::string(key));
    return out;
}

}  // namespace detail

// Throws DomainError on unknown keys or malformed values.
inline void apply_setting(EngineConfig& cfg, std::string_view key, std::string_view value) {
    const std::string k = normalize_key(detail::trim(key));
    const std::string_view v = detail::trim(value);
    for (const auto& s : settings_table()) {
        if (k != s.name) continue;
        std::visit(
            [&](auto member) {
                using T = std::remove_reference_t<decltype(cfg.*member)>;
                if constexpr (std::is_same_v<T, bool>) {
                    if (v == "true" || v == "1" || v == "yes") cfg.*member = true;
                    else if (v == "false" || v == "0" || v == "no") cfg.*member = false;
                    else throw DomainError("bad boolean '" + std::string(v) + "' for " + k);
                } else {
                    cfg.*member = detail::parse_number<T>(v, k);
                }
            },
            s.field);
        return;
    }
    throw DomainError("unknown config key '" + k + "'");
}

// "key = value" lines; '#' starts a comment; blank lines ignored.
inline void read_config_text(EngineConfig& cfg, std::istream& in, const std::string& origin = "config") {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (auto h = s.find('#'); h != std::string_view::npos) s = s.substr(0, h);
        s = detail::trim(s);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw DomainError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        try {
            apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
        } catch (const DomainError& e) {
            throw DomainError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void read_config_file(EngineConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    read_config_text(cfg, in, path);
}

}  // namespace hdexp
