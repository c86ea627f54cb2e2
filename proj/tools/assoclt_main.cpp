// assoclt: command-line front end.
//
// Subcommands: generate, analyze, check, cf, clt, report. Every run is a
// pure function of its arguments: outputs carry a provenance block and
// rerunning the same command (at any thread count) reproduces the files
// byte for byte.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "assoclt/assoclt.hpp"

namespace fs = std::filesystem;
using namespace assoclt;

namespace {

// --------------------------------------------------------------------------
// Shorthand parsing: family grammar `name:key=value,key=value` and the
// n-grid grammar `start:stop:xK` or a comma list. Full fidelity (nested
// monotone transforms, explicit block tables) goes through --config.
// --------------------------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::map<std::string, std::string> parse_kv(const std::string& s) {
    std::map<std::string, std::string> kv;
    if (s.empty()) return kv;
    for (const auto& item : split(s, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("family", "expected key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

std::vector<double> parse_semicolon_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split(s, ';')) out.push_back(std::stod(item));
    return out;
}

BaseDist parse_dist(const std::map<std::string, std::string>& kv, const std::string& fallback) {
    BaseDist d;
    std::string name = fallback;
    if (auto it = kv.find("dist"); it != kv.end()) name = it->second;
    if (auto it = kv.find("innovation"); it != kv.end()) name = it->second;
    if (name == "exp") name = "exponential";
    d.name = dist_name_from_string(name);
    if (auto it = kv.find("rate"); it != kv.end()) d.rate = std::stod(it->second);
    if (auto it = kv.find("half_width"); it != kv.end()) d.half_width = std::stod(it->second);
    return d;
}

FamilySpec parse_family(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const auto kv = parse_kv(colon == std::string::npos ? "" : text.substr(colon + 1));

    if (name == "iid-normal") return FamilySpec::iid(parse_dist(kv, "normal"));
    if (name == "iid-exp") return FamilySpec::iid(parse_dist(kv, "exponential"));
    if (name == "iid-uniform") return FamilySpec::iid(parse_dist(kv, "uniform"));
    if (name == "iid-rademacher") return FamilySpec::iid(parse_dist(kv, "rademacher"));
    if (name == "geo-gauss") {
        double rho = 0.5, var = 1.0;
        if (auto it = kv.find("rho"); it != kv.end()) rho = std::stod(it->second);
        if (auto it = kv.find("var"); it != kv.end()) var = std::stod(it->second);
        return FamilySpec::geometric_gaussian(rho, var);
    }
    if (name == "gauss-table") {
        auto it = kv.find("gamma");
        if (it == kv.end())
            throw CLI::ValidationError("family", "gauss-table needs gamma=v0;v1;...");
        return FamilySpec::gaussian_table(parse_semicolon_list(it->second));
    }
    if (name == "ma") {
        auto it = kv.find("weights");
        if (it == kv.end()) throw CLI::ValidationError("family", "ma needs weights=w0;w1;...");
        return FamilySpec::moving_average(parse_semicolon_list(it->second),
                                          parse_dist(kv, "normal"));
    }
    if (name == "common-factor")
        return FamilySpec::common_factor(parse_dist(kv, "normal"));
    if (name == "markov") {
        double p00 = 0.5, p11 = 0.5;
        bool centered = true;
        if (auto it = kv.find("p00"); it != kv.end()) p00 = std::stod(it->second);
        if (auto it = kv.find("p11"); it != kv.end()) p11 = std::stod(it->second);
        if (auto it = kv.find("centered"); it != kv.end()) centered = it->second != "0";
        return FamilySpec::markov(p00, p11, centered);
    }
    throw CLI::ValidationError(
        "family", "unknown family '" + name +
                      "' (try iid-normal, iid-exp, iid-uniform, iid-rademacher, geo-gauss, "
                      "gauss-table, ma, common-factor, markov, or use --config)");
}

std::vector<std::size_t> parse_n_grid(const std::string& text) {
    std::vector<std::size_t> grid;
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3 || parts[2].empty() || parts[2][0] != 'x')
            throw CLI::ValidationError("n-grid", "expected start:stop:xK or a comma list");
        const std::size_t start = std::stoull(parts[0]);
        const std::size_t stop = std::stoull(parts[1]);
        const std::size_t factor = std::stoull(parts[2].substr(1));
        if (factor < 2) throw CLI::ValidationError("n-grid", "factor must be >= 2");
        for (std::size_t n = start; n <= stop; n *= factor) grid.push_back(n);
    } else {
        for (const auto& item : split(text, ',')) grid.push_back(std::stoull(item));
    }
    if (grid.empty()) throw CLI::ValidationError("n-grid", "empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw CLI::ValidationError("n-grid", "grid not strictly increasing at '" + text + "'");
    return grid;
}

// --------------------------------------------------------------------------
// Config assembly and overrides
// --------------------------------------------------------------------------

struct CommonArgs {
    std::string config_path;
    std::string family_text;
    std::string n_grid_text;
    std::vector<std::string> overrides;
    std::string out_dir;
    unsigned threads = 0;
    int verbosity = 0;
};

void apply_override(ExperimentConfig& cfg, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw CLI::ValidationError("set", "override must be key=value: '" + text + "'");
    const std::string key = text.substr(0, eq);
    const std::string value = text.substr(eq + 1);
    if (key == "reps")
        cfg.reps = std::stoull(value);
    else if (key == "seed")
        cfg.seed = std::stoull(value);
    else if (key == "delta")
        cfg.delta = std::stod(value);
    else if (key == "epsilon")
        cfg.epsilon = std::stod(value);
    else if (key == "hc_literal")
        cfg.hc_literal = value != "0" && value != "false";
    else if (key == "limit_tol")
        cfg.tolerances.limit_tol = std::stod(value);
    else if (key == "analytic_tol")
        cfg.tolerances.analytic_tol = std::stod(value);
    else if (key == "ks_alpha")
        cfg.tolerances.ks_alpha = std::stod(value);
    else if (key == "block.alpha")
        cfg.block_rule = BlockRule::power_rule(std::stod(value));
    else if (key == "block.fixed")
        cfg.block_rule = BlockRule::fixed_rule(std::stoull(value));
    else
        throw CLI::ValidationError("set", "unknown override key '" + key + "'");
}

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw CLI::ValidationError("config", "cannot open " + args.config_path);
        json j;
        try {
            j = json::parse(in);
        } catch (const std::exception& e) {
            throw CLI::ValidationError("config", std::string("parse error: ") + e.what());
        }
        cfg = config_from_json(j);
    }
    if (!args.family_text.empty()) cfg.family = parse_family(args.family_text);
    if (!args.n_grid_text.empty()) cfg.n_grid = parse_n_grid(args.n_grid_text);
    for (const auto& o : args.overrides) apply_override(cfg, o);
    return cfg;
}

fs::path resolve_out_dir(const CommonArgs& args) {
    if (!args.out_dir.empty()) return args.out_dir;
    if (const char* env = std::getenv("ASSOCLT_OUT_DIR"); env && *env) return env;
    return ".";
}

// The recorded command omits thread-count and output-directory flags:
// both are execution details and must not perturb report bytes.
std::string provenance_command(int argc, char** argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--threads" || arg == "-j" || arg == "--out") {
            ++i;
            continue;
        }
        if (arg.rfind("--threads=", 0) == 0 || arg.rfind("--out=", 0) == 0) continue;
        if (!cmd.empty()) cmd += ' ';
        cmd += arg;
    }
    return cmd;
}

Provenance make_provenance(const ExperimentConfig& cfg, const CommonArgs& args, int argc,
                           char** argv) {
    Provenance p;
    p.config_hash = hex64(config_hash(cfg));
    p.master_seed = cfg.seed;
    p.command = provenance_command(argc, argv);
    p.overrides = args.overrides;
    return p;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void note(const CommonArgs& args, const std::string& line) {
    if (args.verbosity > 0) std::cerr << "[assoclt] " << line << "\n";
}

// --------------------------------------------------------------------------
// Subcommand bodies
// --------------------------------------------------------------------------

int cmd_generate(const CommonArgs& args, const ExperimentConfig& cfg, std::size_t n,
                 const std::string& format, const Provenance& prov) {
    const fs::path dir = resolve_out_dir(args);
    fs::create_directories(dir);
    auto set = replicate(cfg.family, n, cfg.reps, cfg.seed, args.threads);
    if (format == "csv") {
        const fs::path path = dir / "paths.csv";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << "# assoclt " << kToolVersion << " family=" << hex64(family_hash(cfg.family))
            << " seed=" << cfg.seed << "\n";
        out << "replicate,index,value\n";
        char buf[40];
        for (std::size_t r = 0; r < set.reps; ++r)
            for (std::size_t i = 0; i < n; ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", set.paths[r].values[i]);
                out << r << "," << i << "," << buf << "\n";
            }
        note(args, "wrote " + path.string());
    } else if (format == "binary") {
        // Layout: magic "ASCLTB01", then reps, n, seed, family hash as
        // little-endian u64, then reps*n doubles replicate-major.
        const fs::path path = dir / "paths.bin";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out.write("ASCLTB01", 8);
        auto put_u64 = [&out](std::uint64_t v) {
            char b[8];
            for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xff);
            out.write(b, 8);
        };
        put_u64(set.reps);
        put_u64(n);
        put_u64(cfg.seed);
        put_u64(family_hash(cfg.family));
        for (const auto& p : set.paths)
            out.write(reinterpret_cast<const char*>(p.values.data()),
                      static_cast<std::streamsize>(sizeof(double) * p.values.size()));
        note(args, "wrote " + path.string());
    } else {
        throw CLI::ValidationError("format", "expected csv or binary");
    }
    (void)prov;
    return 0;
}

int cmd_analyze(const CommonArgs& args, const ExperimentConfig& cfg, std::size_t n,
                bool empirical, bool probes, const Provenance& prov) {
    json j;
    j["provenance"] = to_json(prov);
    j["n"] = n;

    CovarianceProfile profile;
    if (empirical || !has_analytic_profile(cfg.family)) {
        auto set = replicate(cfg.family, n, cfg.reps, cfg.seed, args.threads);
        profile = empirical_profile(set);
        j["source"] = "empirical";
        j["reps"] = cfg.reps;
        if (probes) {
            auto assoc = association_probe(set, default_battery());
            json probes_json;
            probes_json["association"] = {{"min_value", assoc.min_value},
                                          {"min_stderr", assoc.min_stderr},
                                          {"violation", assoc.violation}};
            if (family_centered(cfg.family)) {
                auto demi = demimartingale_probe(set);
                probes_json["demimartingale"] = {{"min_value", demi.min_value},
                                                 {"min_stderr", demi.min_stderr},
                                                 {"violation", demi.violation}};
            }
            j["probes"] = probes_json;
        }
    } else {
        profile = analytic_profile(cfg.family, n);
        j["source"] = "analytic";
    }

    j["s_n2"] = s_n_squared(profile);
    if (has_analytic_profile(cfg.family)) {
        const LongRunVariance lrv = long_run_variance(cfg.family);
        if (lrv.finite)
            j["sigma2"] = lrv.value;
        else
            j["sigma2"] = "infinite";
    }
    json u = json::array();
    for (std::size_t r = 0; r <= n / 2; r = r == 0 ? 1 : r * 2) {
        json row;
        row["r"] = r;
        row["value"] = cox_coefficient(profile, r);
        if (auto closed = cox_coefficient_infinite(cfg.family, r))
            row["infinite_window"] = std::isinf(*closed) ? json("divergent") : json(*closed);
        u.push_back(row);
    }
    j["u"] = u;

    const fs::path dir = resolve_out_dir(args);
    fs::create_directories(dir);
    const fs::path path = dir / "covariance_report.json";
    write_json_file(path, j);
    note(args, "wrote " + path.string());
    return 0;
}

int cmd_check(const CommonArgs& args, const ExperimentConfig& cfg,
              const std::vector<std::string>& conditions, const Provenance& prov) {
    cfg.validate();
    ConditionGridRunner runner(GridSpec::from_config(cfg, args.threads));
    json arr = json::array();
    for (const auto& id : conditions) {
        if (id == "Cox")
            arr.push_back(to_json(runner.run_cox()));
        else if (id == "OliveiraA")
            arr.push_back(to_json(runner.run_oliveira_A()));
        else if (id == "OliveiraB")
            arr.push_back(to_json(runner.run_oliveira_B()));
        else if (id == "Lindeberg") {
            arr.push_back(to_json(runner.run("LindebergNu")));
            arr.push_back(to_json(runner.run("LindebergSn")));
        } else {
            arr.push_back(to_json(runner.run(id)));
        }
    }
    json j;
    j["provenance"] = to_json(prov);
    j["reports"] = arr;

    const fs::path dir = resolve_out_dir(args);
    fs::create_directories(dir);
    const fs::path path = dir / "conditions.json";
    write_json_file(path, j);
    note(args, "wrote " + path.string());
    return 0;
}

int cmd_cf(const CommonArgs& args, const ExperimentConfig& cfg, std::size_t n,
           const std::string& which, const std::vector<double>& t_grid, const Provenance& prov) {
    const BlockScheme scheme = make_block_scheme(n, cfg.block_rule);
    BlockSumSample sample = build_block_sums(cfg.family, scheme, cfg.reps, cfg.seed, {},
                                             args.threads);
    const bool analytic = has_analytic_profile(cfg.family);
    CovarianceProfile profile;
    double snsq;
    if (analytic) {
        profile = analytic_profile(cfg.family, n);
        snsq = s_n_squared(profile);
    } else {
        snsq = empirical_s_n_squared(sample);
    }

    std::vector<CfGapPoint> pts;
    if (which == "block") {
        std::function<double(double)> bound;
        if (analytic) bound = [&](double t) { return newman_gap_bound(profile, scheme, t); };
        pts = cf_block_gap(sample, snsq, t_grid, bound);
    } else if (which == "product") {
        pts = cf_product_limit(sample, snsq, t_grid);
    } else if (which == "truncation") {
        const double tail = analytic
                                ? block_stats(profile, scheme).tail_var
                                : empirical_block_stats(sample).tail_var;
        pts = cf_truncation_gap(sample, snsq, tail, t_grid);
    } else {
        throw CLI::ValidationError("which", "expected block, product or truncation");
    }

    // One ecf row per t alongside the gap columns.
    std::vector<double> normalized(sample.reps);
    const double s_n = std::sqrt(snsq);
    for (std::size_t i = 0; i < sample.reps; ++i) normalized[i] = sample.totals[i] / s_n;
    auto cf_points = ecf(normalized, t_grid);

    const fs::path dir = resolve_out_dir(args);
    fs::create_directories(dir);
    const fs::path path = dir / ("cf_" + which + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# assoclt " << kToolVersion << " config=" << prov.config_hash
        << " seed=" << cfg.seed << "\n";
    out << "t,re,im,stderr,gap,bound,holds\n";
    char buf[220];
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", pts[i].t,
                      cf_points[i].value.real(), cf_points[i].value.imag(),
                      cf_points[i].stderr_, pts[i].gap, pts[i].bound, pts[i].holds ? 1 : 0);
        out << buf;
    }
    note(args, "wrote " + path.string());
    return 0;
}

int cmd_clt(const CommonArgs& args, const ExperimentConfig& cfg, std::size_t n,
            const std::string& normalizer, const Provenance& prov) {
    auto verdict = run_clt(cfg.family, n, cfg.reps, cfg.seed,
                           normalizer_from_string(normalizer), cfg.tolerances.ks_alpha,
                           args.threads);
    json j;
    j["provenance"] = to_json(prov);
    j.update(to_json(verdict));
    const fs::path dir = resolve_out_dir(args);
    fs::create_directories(dir);
    const fs::path path = dir / "clt_verdict.json";
    write_json_file(path, j);
    note(args, "wrote " + path.string());
    return 0;
}

int cmd_report(const CommonArgs& args, const ExperimentConfig& cfg, const std::string& theorem,
               const std::string& format, bool allow_large, const Provenance& prov) {
    auto rep = run_theorem(theorem_from_string(theorem), cfg, args.threads, allow_large);
    const fs::path dir = resolve_out_dir(args);
    auto files = emit_report(rep, report_format_from_string(format), dir, prov);
    for (const auto& f : files) note(args, "wrote " + f.string());
    // Exit 0 whenever the report was produced, whatever the verdicts say.
    return 0;
}

void add_common(CLI::App* sub, CommonArgs& args, bool with_grid) {
    sub->add_option("--config", args.config_path, "Experiment config file (JSON)");
    sub->add_option("--family", args.family_text,
                    "Family shorthand name:key=value,... (see --help-all)");
    if (with_grid)
        sub->add_option("--n-grid", args.n_grid_text, "Grid: start:stop:xK or comma list");
    sub->add_option("--set", args.overrides,
                    "Config override key=value (reps, seed, delta, epsilon, hc_literal, "
                    "limit_tol, analytic_tol, ks_alpha, block.alpha, block.fixed)");
    sub->add_option("--out", args.out_dir, "Output directory (default $ASSOCLT_OUT_DIR or .)");
    sub->add_option("--threads,-j", args.threads, "Worker threads (0 = hardware)");
    sub->add_flag("-v", args.verbosity, "Verbose progress notes on stderr");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for CLTs over associated sequences"};
    app.require_subcommand(1);

    CommonArgs args;
    std::size_t n = 1024;
    std::size_t reps_flag = 0;
    std::uint64_t seed_flag = 0;
    bool seed_set = false, reps_set = false;

    auto add_seed_reps = [&](CLI::App* sub) {
        sub->add_option("--reps", reps_flag, "Replicates")->each([&](const std::string&) {
            reps_set = true;
        });
        sub->add_option("--seed", seed_flag, "Master seed")->each([&](const std::string&) {
            seed_set = true;
        });
    };

    auto* generate = app.add_subcommand("generate", "Write seeded sample paths (csv or binary)");
    add_common(generate, args, false);
    add_seed_reps(generate);
    std::string gen_format = "csv";
    generate->add_option("--n", n, "Sequence length");
    generate->add_option("--format", gen_format, "csv | binary");

    auto* analyze = app.add_subcommand("analyze", "Covariance report: s_n^2, sigma^2, u(r), probes");
    add_common(analyze, args, false);
    add_seed_reps(analyze);
    bool empirical = false, probes = false;
    analyze->add_option("--n", n, "Sequence length");
    analyze->add_flag("--empirical", empirical, "Force the Monte Carlo covariance route");
    analyze->add_flag("--probes", probes, "Run association/demimartingale probes (empirical)");

    auto* check = app.add_subcommand("check", "Evaluate finite-n conditions over an n grid");
    add_common(check, args, true);
    add_seed_reps(check);
    std::string conditions_text = "H0,Ha,Hab,Hb,Hc";
    check->add_option("--conditions", conditions_text,
                      "Comma list: H0,Ha,Hab,Hb,Hc,FellerMax,Lindeberg,HNab,L,Cox,"
                      "OliveiraA,OliveiraB");

    auto* cf = app.add_subcommand("cf", "Characteristic-function gap diagnostics (CSV)");
    add_common(cf, args, false);
    add_seed_reps(cf);
    std::string which = "block", t_grid_text;
    cf->add_option("--n", n, "Sequence length");
    cf->add_option("--which", which, "block | product | truncation");
    cf->add_option("--t-grid", t_grid_text, "Comma list of t values (default symmetric grid)");

    auto* clt = app.add_subcommand("clt", "Monte Carlo CLT run with KS normality test");
    add_common(clt, args, false);
    add_seed_reps(clt);
    std::string normalizer = "analytic_s_n";
    clt->add_option("--n", n, "Sequence length");
    clt->add_option("--normalizer", normalizer,
                    "analytic_s_n | empirical_s_n | stationary_sigma_sqrt_n");

    auto* report = app.add_subcommand("report", "Theorem-level composite report");
    add_common(report, args, true);
    add_seed_reps(report);
    std::string theorem = "T1_general", format = "json";
    bool allow_large = false;
    report->add_option("--theorem", theorem,
                       "T1_stationary | T1_general | T2 | T3 | Cox | OliveiraA | OliveiraB | "
                       "GapDemo");
    report->add_option("--format", format, "json | csv-bundle");
    report->add_flag("--allow-large", allow_large, "Override the reps*n <= 1e9 budget guard");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg = load_config(args);
        if (reps_set) cfg.reps = reps_flag;
        if (seed_set) cfg.seed = seed_flag;
        if (cfg.n_grid.empty()) cfg.n_grid = {n};
        require_valid(cfg.family);
        const Provenance prov = make_provenance(cfg, args, argc, argv);

        if (generate->parsed()) return cmd_generate(args, cfg, n, gen_format, prov);
        if (analyze->parsed()) return cmd_analyze(args, cfg, n, empirical, probes, prov);
        if (check->parsed()) {
            std::vector<std::string> conditions = split(conditions_text, ',');
            return cmd_check(args, cfg, conditions, prov);
        }
        if (cf->parsed()) {
            std::vector<double> t_grid = t_grid_text.empty()
                                             ? default_t_grid()
                                             : parse_semicolon_list(t_grid_text);
            if (!t_grid_text.empty()) {
                t_grid.clear();
                for (const auto& item : split(t_grid_text, ',')) t_grid.push_back(std::stod(item));
            }
            return cmd_cf(args, cfg, n, which, t_grid, prov);
        }
        if (clt->parsed()) return cmd_clt(args, cfg, n, normalizer, prov);
        if (report->parsed()) return cmd_report(args, cfg, theorem, format, allow_large, prov);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
