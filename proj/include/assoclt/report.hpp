#pragma once

// Deterministic serialization of reports: the same report serializes to
// byte-identical output. JSON carries a versioned schema and a provenance
// block; the csv-bundle format writes one CSV per condition grid plus a
// verdict CSV.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "assoclt/cf.hpp"
#include "assoclt/condition_grid.hpp"
#include "assoclt/harness.hpp"
#include "assoclt/model.hpp"

namespace assoclt {

inline constexpr const char* kToolVersion = "0.1.0";

struct Provenance {
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::string command;  // argv joined, when invoked from the CLI
    std::vector<std::string> overrides;
};

inline json to_json(const Provenance& p) {
    json j;
    j["tool"] = "assoclt";
    j["version"] = kToolVersion;
    j["config_hash"] = p.config_hash;
    j["seed"] = p.master_seed;
    if (!p.command.empty()) j["command"] = p.command;
    if (!p.overrides.empty()) j["overrides"] = p.overrides;
    return j;
}

inline json to_json(const ConditionValue& cv) {
    json j;
    j["n"] = cv.n;
    j["value"] = cv.value;
    j["target"] = cv.target;
    j["stderr"] = cv.stderr_;
    j["analytic"] = cv.analytic;
    if (!cv.warning.empty()) j["warning"] = cv.warning;
    return j;
}

inline json to_json(const ConditionReport& r) {
    json j;
    j["condition_id"] = r.condition_id;
    j["coordinate"] = r.coordinate;
    j["verdict"] = to_string(r.verdict);
    j["rule"] = to_string(r.rule);
    j["trend_slope"] = r.trend_slope;
    j["thresholds"] = {{"limit_tol", r.thresholds.limit_tol},
                       {"monotone_floor", r.thresholds.monotone_floor},
                       {"flat_slope", r.thresholds.flat_slope}};
    json grid = json::array();
    for (const auto& cv : r.grid) grid.push_back(to_json(cv));
    j["grid"] = grid;
    return j;
}

inline json to_json(const CompositeReport& c) {
    json j;
    j["id"] = c.id;
    j["holds"] = c.holds;
    json parts = json::array();
    for (const auto& p : c.parts) parts.push_back(to_json(p));
    j["parts"] = parts;
    return j;
}

inline json to_json(const MomentSummary& s) {
    json j;
    j["count"] = s.count;
    j["mean"] = s.mean;
    j["sd"] = s.sd;
    j["skewness"] = s.skewness;
    j["excess_kurtosis"] = s.excess_kurtosis;
    return j;
}

inline json to_json(const CltVerdict& v) {
    json j;
    j["family"] = to_json(v.family);
    j["n"] = v.n;
    j["reps"] = v.reps;
    j["seed"] = v.seed;
    j["normalizer"] = to_string(v.normalizer);
    j["scale"] = v.scale;
    j["summary"] = to_json(v.summary);
    j["ks_distance"] = v.ks_distance;
    j["ks_critical"] = v.ks_critical;
    j["pass"] = v.pass;
    return j;
}

inline json to_json(const CfGapPoint& p) {
    json j;
    j["t"] = p.t;
    j["gap"] = p.gap;
    j["bound"] = p.bound;
    j["stderr"] = p.stderr_;
    j["holds"] = p.holds;
    return j;
}

inline json to_json(const TheoremReport& r) {
    json j;
    j["schema_version"] = 1;
    j["theorem_id"] = to_string(r.theorem_id);
    j["config"] = to_json(r.config);
    json conds = json::array();
    for (const auto& c : r.conditions) conds.push_back(to_json(c));
    j["conditions"] = conds;
    json diags = json::array();
    for (const auto& d : r.diagnostics) diags.push_back(to_json(d));
    j["diagnostics"] = diags;
    json comps = json::array();
    for (const auto& c : r.composites) comps.push_back(to_json(c));
    j["composites"] = comps;
    if (r.clt) j["clt"] = to_json(*r.clt);
    j["consistency"] = to_string(r.consistency);
    if (r.theorem_id == TheoremId::GapDemo) j["gap_flag"] = r.gap_flag;
    if (r.incomplete) {
        j["incomplete"] = true;
        j["failure"] = r.failure;
    }
    return j;
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string csv_header_line(const Provenance& prov) {
    return std::string("# assoclt ") + kToolVersion + " config=" + prov.config_hash +
           " seed=" + std::to_string(prov.master_seed) + "\n";
}

}  // namespace detail

enum class ReportFormat { json, csv_bundle };

inline ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv-bundle" || s == "csv") return ReportFormat::csv_bundle;
    throw std::invalid_argument("unknown report format: " + s);
}

// Writes a theorem report; returns the emitted file paths. JSON output is a
// single file; csv-bundle emits one CSV per condition grid, a verdict CSV,
// and the normalized CLT samples.
inline std::vector<std::filesystem::path> emit_report(const TheoremReport& report,
                                                      ReportFormat format,
                                                      const std::filesystem::path& out_dir,
                                                      const Provenance& prov) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> files;
    if (format == ReportFormat::json) {
        json j;
        j["provenance"] = to_json(prov);
        j.update(to_json(report));
        const auto path = out_dir / (to_string(report.theorem_id) + "_report.json");
        detail::write_file(path, j.dump(2) + "\n");
        files.push_back(path);
        return files;
    }

    const std::string header = detail::csv_header_line(prov);
    auto emit_condition_csv = [&](const ConditionReport& c, const std::string& prefix) {
        std::string body = header;
        body += c.coordinate + ",value,target,stderr,analytic\n";
        for (const auto& cv : c.grid)
            body += std::to_string(cv.n) + "," + detail::format_double(cv.value) + "," +
                    detail::format_double(cv.target) + "," + detail::format_double(cv.stderr_) +
                    "," + (cv.analytic ? "1" : "0") + "\n";
        const auto path = out_dir / (prefix + c.condition_id + ".csv");
        detail::write_file(path, body);
        files.push_back(path);
    };

    std::string verdicts = header;
    verdicts += "condition_id,verdict,rule,trend_slope,limit_tol\n";
    auto verdict_row = [&](const ConditionReport& c) {
        verdicts += c.condition_id + "," + to_string(c.verdict) + "," + to_string(c.rule) + "," +
                    detail::format_double(c.trend_slope) + "," +
                    detail::format_double(c.thresholds.limit_tol) + "\n";
    };

    for (const auto& c : report.conditions) {
        emit_condition_csv(c, "");
        verdict_row(c);
    }
    for (const auto& d : report.diagnostics) {
        emit_condition_csv(d, "diag_");
        verdict_row(d);
    }
    for (const auto& comp : report.composites)
        for (const auto& part : comp.parts) {
            emit_condition_csv(part, comp.id + "_");
            verdict_row(part);
        }
    if (report.clt) {
        verdicts += "clt," + std::string(report.clt->pass ? "pass" : "fail") + ",ks," +
                    detail::format_double(report.clt->ks_distance) + "," +
                    detail::format_double(report.clt->ks_critical) + "\n";
        std::string body = header;
        body += "replicate,normalized_sum\n";
        for (std::size_t i = 0; i < report.clt->normalized.size(); ++i)
            body += std::to_string(i) + "," + detail::format_double(report.clt->normalized[i]) +
                    "\n";
        const auto spath = out_dir / "clt_samples.csv";
        detail::write_file(spath, body);
        files.push_back(spath);
    }
    const auto vpath = out_dir / "verdicts.csv";
    detail::write_file(vpath, verdicts);
    files.push_back(vpath);
    return files;
}

}  // namespace assoclt
