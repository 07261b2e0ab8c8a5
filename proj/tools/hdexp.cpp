// hdexp: expected pressure and dimension estimates for random exponential maps.

#include <hdexp/hdexp.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace hdexp;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "x1,x2,..." or "lo:hi:n" (n equally spaced points, endpoints included)
std::vector<double> parse_grid(const std::string& spec, const char* what) {
    std::vector<double> out;
    auto num = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw UsageError(std::string("bad number '") + s + "' in " + what);
        }
    };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw UsageError(std::string(what) + " range must be lo:hi:n");
        double lo = num(parts[0]), hi = num(parts[1]);
        int n = static_cast<int>(num(parts[2]));
        if (n < 1) throw UsageError(std::string(what) + " needs n >= 1");
        for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
        return out;
    }
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');)
        if (!p.empty()) out.push_back(num(p));
    if (out.empty()) throw UsageError(std::string("empty ") + what);
    return out;
}

SamplingMode parse_mode(const std::string& m) {
    if (m == "complex") return SamplingMode::complex_disk;
    if (m == "real") return SamplingMode::real_interval;
    throw UsageError("--mode must be complex or real");
}

// Output goes to --out if given, stdout otherwise; written once, at the end.
void emit(const std::string& path, const std::string& bytes) {
    if (path.empty() || path == "-") {
        std::cout << bytes << std::flush;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write " + path);
    f << bytes;
}

std::string json_text(nlohmann::json j) { return j.dump(2) + "\n"; }

struct LawArgs {
    std::optional<double> a;
    double r = 0.0;
    std::uint64_t seed = 7;
    std::string mode = "complex";

    void add(CLI::App* sub, bool need_a = true) {
        auto* o = sub->add_option("--a", a, "center of the parameter disk");
        if (need_a) o->required();
        sub->add_option("--r", r, "radius of the parameter disk")->capture_default_str();
        sub->add_option("--seed", seed, "random seed")->capture_default_str();
        sub->add_option("--mode", mode, "complex (disk) or real (interval) sampling")->capture_default_str();
    }
    [[nodiscard]] ParameterLaw law(const EngineConfig& cfg) const {
        return ParameterLaw::make(a.value_or(0.18), r, cfg, parse_mode(mode));
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hausdorff dimension of radial Julia sets of random exponential maps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("hdexp ") + kVersion);

    std::string config_path;
    std::optional<unsigned> threads;
    app.add_option("--config", config_path, "key = value file; flags override it")->check(CLI::ExistingFile);
    app.add_option("--threads", threads, "worker threads (default: HDEXP_THREADS, else all cores)");

    // one flag per engine setting; kept as text and applied after the file
    std::map<std::string, std::string> overrides;
    std::vector<std::pair<std::string, CLI::Option*>> engine_opts;
    for (const auto& s : settings_table()) {
        std::string flag = std::string("--") + s.name;
        for (auto& c : flag)
            if (c == '_') c = '-';
        auto* o = app.add_option(flag, overrides[s.name], s.help)->group("Engine settings");
        engine_opts.emplace_back(s.name, o);
    }

    // pressure
    auto* p_cmd = app.add_subcommand("pressure", "expected pressure on a t-grid with one shared fiber");
    p_cmd->fallthrough();
    LawArgs p_law;
    p_law.add(p_cmd);
    std::string p_grid = "1.5", p_out;
    std::optional<double> p_tau;
    p_cmd->add_option("--t-grid", p_grid, "t values: x1,x2,... or lo:hi:n")->capture_default_str();
    p_cmd->add_option("--tau", p_tau, "fixed tau (default: schedule)");
    p_cmd->add_option("--out", p_out, "CSV output (default stdout)");

    // dimension
    auto* d_cmd = app.add_subcommand("dimension", "zero of the expected pressure");
    d_cmd->fallthrough();
    LawArgs d_law;
    d_law.add(d_cmd);
    std::string d_out;
    d_cmd->add_option("--out", d_out, "JSON output (default stdout)");

    // sweep
    auto* s_cmd = app.add_subcommand("sweep", "dimension over an (a, r) grid");
    s_cmd->fallthrough();
    std::string s_agrid = "0.14:0.20:13", s_rgrid = "0", s_out, s_smooth;
    std::uint64_t s_seed = 7;
    s_cmd->add_option("--a-grid", s_agrid, "a values: x1,x2,... or lo:hi:n")->capture_default_str();
    s_cmd->add_option("--r-grid", s_rgrid, "r values: x1,x2,... or lo:hi:n")->capture_default_str();
    s_cmd->add_option("--seed", s_seed, "random seed")->capture_default_str();
    s_cmd->add_option("--out", s_out, "CSV output (default stdout)");
    s_cmd->add_option("--smoothness-out", s_smooth, "JSON smoothness report per r row");

    // verify
    auto* v_cmd = app.add_subcommand("verify", "audit the standing hypotheses; exit 0 iff all pass");
    v_cmd->fallthrough();
    LawArgs v_law;
    v_law.add(v_cmd, false);
    std::string v_out;
    v_cmd->add_option("--out", v_out, "JSON report (default: text summary on stdout)");

    // julia
    auto* j_cmd = app.add_subcommand("julia", "backward-orbit sample of a fiber Julia set as a P5 image");
    j_cmd->fallthrough();
    LawArgs j_law;
    j_law.add(j_cmd);
    std::int64_t j_points = 50000;
    int j_depth = 25, j_w = 400, j_h = 800;
    Window win;
    std::string j_out;
    j_cmd->add_option("--points", j_points, "orbit count")->capture_default_str();
    j_cmd->add_option("--depth", j_depth, "backward steps")->capture_default_str();
    j_cmd->add_option("--width", j_w, "image width")->capture_default_str();
    j_cmd->add_option("--height", j_h, "image height")->capture_default_str();
    j_cmd->add_option("--re-min", win.re_min)->capture_default_str();
    j_cmd->add_option("--re-max", win.re_max)->capture_default_str();
    j_cmd->add_option("--im-min", win.im_min)->capture_default_str();
    j_cmd->add_option("--im-max", win.im_max)->capture_default_str();
    j_cmd->add_option("--out", j_out, "PGM output (default stdout)");

    // oracle
    auto* o_cmd = app.add_subcommand("oracle", "pruned preimage-tree sum, or its Bowen zero with --bowen");
    o_cmd->fallthrough();
    LawArgs o_law;
    o_law.add(o_cmd);
    double o_t = 1.5;
    std::optional<double> o_tau;
    std::optional<int> o_depth;
    std::optional<double> o_rel;
    bool o_bowen = false;
    std::string o_out;
    o_cmd->add_option("--t", o_t, "exponent t")->capture_default_str();
    o_cmd->add_option("--tau", o_tau, "tau (default: schedule)");
    o_cmd->add_option("--depth", o_depth, "tree depth (default: oracle_depth)");
    o_cmd->add_option("--rel-tol", o_rel, "pruned-mass target (default: oracle_rel_tol)");
    o_cmd->add_flag("--bowen", o_bowen, "bisect t for a zero of the tree pressure (r = 0 only)");
    o_cmd->add_option("--out", o_out, "JSON output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        EngineConfig cfg;
        if (!config_path.empty()) read_config_file(cfg, config_path);
        for (const auto& [name, opt] : engine_opts)
            if (opt->count() > 0) apply_setting(cfg, name, overrides[name]);

        unsigned nthreads = 0;
        if (threads) {
            nthreads = *threads;
        } else if (const char* env = std::getenv("HDEXP_THREADS")) {
            try {
                nthreads = static_cast<unsigned>(std::stoul(env));
            } catch (const std::exception&) {
                throw UsageError("HDEXP_THREADS must be a nonnegative integer");
            }
        }
        set_thread_count(nthreads);

        if (*p_cmd) {
            ParameterLaw law = p_law.law(cfg);
            std::vector<double> ts = parse_grid(p_grid, "--t-grid");
            auto fiber = common_random_numbers(law, p_law.seed, static_cast<std::size_t>(cfg.steps), ts, cfg);
            PressureCurve curve(fiber, cfg);
            std::vector<PressureEstimate> rows;
            for (double t : ts) rows.push_back(curve(t, p_tau));
            std::ostringstream os;
            write_provenance(os, "pressure", cfg, p_law.seed);
            os << "# a=" << law.a << " r=" << law.r << " mode=" << p_law.mode << '\n';
            write_pressure_csv(os, rows);
            emit(p_out, os.str());
        } else if (*d_cmd) {
            ParameterLaw law = d_law.law(cfg);
            DimensionResult res = find_bowen_zero(law, d_law.seed, cfg);
            nlohmann::json j = {{"provenance", provenance_json("dimension", cfg, d_law.seed)}, {"result", to_json(res)}};
            emit(d_out, json_text(j));
        } else if (*s_cmd) {
            std::vector<double> as = parse_grid(s_agrid, "--a-grid"), rs = parse_grid(s_rgrid, "--r-grid");
            std::vector<SweepCell> cells = sweep_dimension(as, rs, s_seed, cfg);
            std::ostringstream os;
            write_provenance(os, "sweep", cfg, s_seed);
            write_sweep_csv(os, cells);
            emit(s_out, os.str());

            nlohmann::json rows = nlohmann::json::array();
            for (double r : rs) {
                std::vector<double> x, h, e;
                for (const auto& c : cells)
                    if (c.r == r && c.result) {
                        x.push_back(c.a);
                        h.push_back(c.result->h);
                        e.push_back(c.result->h_std_error);
                    }
                if (x.size() < 12) continue;
                SmoothnessReport sr = smoothness_diagnostic(x, h, e);
                std::cerr << "smoothness r=" << r << ": max residual " << sr.max_residual << ", noise floor "
                          << sr.noise_floor << (sr.consistent ? " (consistent)\n" : " (NOT consistent)\n");
                nlohmann::json row = to_json(sr);
                row["r"] = r;
                rows.push_back(row);
            }
            if (!s_smooth.empty())
                emit(s_smooth, json_text({{"provenance", provenance_json("sweep", cfg, s_seed)}, {"rows", rows}}));
            for (const auto& c : cells)
                if (!c.result) return 1;
        } else if (*v_cmd) {
            ParameterLaw law = v_law.law(cfg);
            AuditReport rep = run_hypothesis_audit(law, v_law.seed, cfg);
            if (v_out.empty()) {
                std::ostringstream os;
                write_provenance(os, "verify", cfg, v_law.seed);
                os << audit_summary(rep);
                emit("", os.str());
            } else {
                emit(v_out, json_text({{"provenance", provenance_json("verify", cfg, v_law.seed)},
                                       {"report", to_json(rep)}}));
                std::cerr << audit_summary(rep);
            }
            return rep.all_pass() ? 0 : 1;
        } else if (*j_cmd) {
            ParameterLaw law = j_law.law(cfg);
            auto fiber = std::make_shared<const FiberSequence>(
                sample_fiber(law, j_law.seed, static_cast<std::size_t>(std::max(j_depth, 1)), cfg));
            JuliaSample js = backward_orbit_sample(fiber, j_points, j_depth, j_law.seed, cfg);
            Raster img = rasterize(js, win, j_w, j_h);
            std::ostringstream hdr;
            hdr << "hdexp " << kVersion << " format=1 command=julia config_hash=" << config_hash(cfg)
                << " seed=" << j_law.seed << " a=" << law.a << " r=" << law.r << " depth=" << j_depth
                << " points=" << j_points;
            emit(j_out, img.pgm(hdr.str()));
            std::cerr << "julia: " << img.total() << " of " << j_points << " points in window, "
                      << img.nonzero() << " pixels lit, max |z| " << js.bound_M << '\n';
        } else if (*o_cmd) {
            ParameterLaw law = o_law.law(cfg);
            nlohmann::json j = {{"provenance", provenance_json("oracle", cfg, o_law.seed)}};
            if (o_bowen) {
                if (o_depth) cfg.oracle_depth = *o_depth;
                if (o_rel) cfg.oracle_rel_tol = *o_rel;
                j["h"] = oracle_bowen(law, cfg);
                j["depth"] = cfg.oracle_depth;
            } else {
                int n = o_depth.value_or(cfg.oracle_depth);
                FiberSequence fiber = sample_fiber(law, o_law.seed, static_cast<std::size_t>(std::max(n, 1)), cfg);
                Potential pot = Potential::make(o_t, o_tau ? *o_tau : tau_schedule(o_t, cfg));
                TreeOptions opt = TreeOptions::from(cfg);
                if (o_rel) opt.rel_tol = *o_rel;
                try {
                    TreePressure tp = tree_pressure(fiber.etas, pot, cplx(cfg.xi0, 0.0), n, opt);
                    j["tree"] = to_json(tp);
                    j["t"] = pot.t;
                    j["tau"] = pot.tau;
                } catch (const BudgetExceeded& e) {
                    std::cerr << "partial: " << to_json(e.partial).dump() << '\n';
                    throw;
                }
            }
            emit(o_out, json_text(j));
        }
    } catch (const UsageError& e) {
        std::cerr << "hdexp: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "hdexp: " << e.what() << '\n';
        return 2;
    } catch (const ComputationError& e) {
        std::cerr << "hdexp: computation failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
