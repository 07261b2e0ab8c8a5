#pragma once

#include "config.hpp"
#include "julia.hpp"
#include "oracle.hpp"
#include "pressure.hpp"
#include "verify.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace hdexp {

// Every artifact starts with these lines (prefixed by the format's comment
// marker): format version, engine version, config hash, seed, and the full
// resolved config.  Nothing here depends on the thread count or the clock.
inline std::vector<std::string> provenance_lines(const std::string& command, const EngineConfig& cfg,
                                                 std::uint64_t seed) {
    return {"hdexp " + std::string(kVersion) + " format=1 command=" + command,
            "config_hash=" + config_hash(cfg) + " seed=" + std::to_string(seed), "config " + cfg.canonical()};
}

inline void write_provenance(std::ostream& os, const std::string& command, const EngineConfig& cfg,
                             std::uint64_t seed) {
    for (const auto& l : provenance_lines(command, cfg, seed)) os << "# " << l << '\n';
}

inline nlohmann::json provenance_json(const std::string& command, const EngineConfig& cfg, std::uint64_t seed) {
    return {{"engine", "hdexp"}, {"version", kVersion},      {"format", 1}, {"command", command},
            {"config_hash", config_hash(cfg)}, {"seed", seed}, {"config", cfg.canonical()}};
}

inline void write_pressure_csv(std::ostream& os, const std::vector<PressureEstimate>& rows) {
    os.precision(17);
    os << "t,tau,value,std_error,N,burn_in\n";
    for (const auto& e : rows)
        os << e.t << ',' << e.tau << ',' << e.value << ',' << e.std_error << ',' << e.N << ',' << e.burn_in << '\n';
}

inline nlohmann::json to_json(const DimensionResult& r) {
    nlohmann::json samples = nlohmann::json::array();
    for (auto [t, v] : r.samples) samples.push_back({t, v});
    return {{"a", r.law.a},
            {"r", r.law.r},
            {"seed", r.seed},
            {"h", r.h},
            {"t_lo", r.t_lo},
            {"t_hi", r.t_hi},
            {"residual", r.residual},
            {"evaluations", r.evaluations},
            {"slope", r.slope},
            {"h_std_error", r.h_std_error},
            {"samples", samples}};
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
    os.precision(17);
    os << "a,r,h,residual,t_lo,t_hi,evaluations,seed,h_std_error,error\n";
    for (const auto& c : cells) {
        os << c.a << ',' << c.r << ',';
        if (c.result) {
            const auto& d = *c.result;
            os << d.h << ',' << d.residual << ',' << d.t_lo << ',' << d.t_hi << ',' << d.evaluations << ',' << c.seed
               << ',' << d.h_std_error << ",\n";
        } else {
            std::string e = c.error;
            for (auto& ch : e)
                if (ch == ',' || ch == '\n') ch = ';';
            os << "nan,nan,nan,nan,0," << c.seed << ",nan," << e << '\n';
        }
    }
}

inline nlohmann::json to_json(const SmoothnessReport& s) {
    return {{"coefficients", s.coefficients},
            {"max_residual", s.max_residual},
            {"noise_floor", s.noise_floor},
            {"consistent", s.consistent}};
}

inline nlohmann::json to_json(const AuditReport& rep) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : rep.checks) {
        nlohmann::json m = nlohmann::json::object();
        for (const auto& [k, v] : c.measured) m[k] = v;
        checks.push_back({{"name", c.name}, {"measured", m}, {"threshold", c.threshold}, {"pass", c.pass}});
    }
    return {{"a", rep.law.a}, {"r", rep.law.r}, {"seed", rep.seed}, {"checks", checks}, {"all_pass", rep.all_pass()}};
}

inline std::string audit_summary(const AuditReport& rep) {
    std::ostringstream os;
    os.precision(6);
    for (const auto& c : rep.checks) {
        os << (c.pass ? "PASS " : "FAIL ") << c.name << ":";
        for (const auto& [k, v] : c.measured) os << ' ' << k << '=' << v;
        os << "  [" << c.threshold << "]\n";
    }
    os << (rep.all_pass() ? "all checks passed\n" : "some checks failed\n");
    return os.str();
}

inline nlohmann::json to_json(const TreePressure& tp) {
    return {{"w0", {tp.w0.real(), tp.w0.imag()}},
            {"n", tp.n},
            {"log_value", tp.log_value},
            {"pressure", tp.log_value / tp.n},
            {"pruned_mass_bound", tp.pruned_mass_bound},
            {"relative_pruned", tp.relative_pruned()},
            {"nodes_expanded", tp.nodes_expanded},
            {"passes", tp.passes}};
}

}  // namespace hdexp
