#pragma once

// Block statistics over the n = m*l + r decomposition and the finite-n
// condition evaluators: H0, Ha, Hab, Hb, Hc, the Feller max, block and
// per-variable Lindeberg functionals, HNab, and the Cox / Oliveira
// composites. Each condition traces a trajectory over an n grid and gets a
// trend verdict under a declared decision rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "assoclt/covariance.hpp"
#include "assoclt/generators.hpp"
#include "assoclt/math.hpp"
#include "assoclt/model.hpp"

namespace assoclt {

// ---------------------------------------------------------------------------
// Block statistics
// ---------------------------------------------------------------------------

// tau_j^2 = Var(S_{jl} - S_{(j-1)l}) for j = 1..m, the tail variance over
// indices ml+1..n, and nu^2 = sum_j tau_j^2.
struct BlockStats {
    BlockScheme scheme;
    std::vector<double> tau_sq;
    double tail_var = 0.0;
    double nu_sq = 0.0;
    ProfileSource source = ProfileSource::analytic;
};

inline BlockStats block_stats(const CovarianceProfile& profile, const BlockScheme& scheme) {
    if (scheme.n != profile.n)
        throw std::invalid_argument("block_stats: scheme and profile dimensions differ");
    BlockStats out;
    out.scheme = scheme;
    out.source = profile.source;
    out.tau_sq.resize(scheme.m);
    if (profile.stationary) {
        const double tau = window_variance(profile, 0, scheme.ell);
        std::fill(out.tau_sq.begin(), out.tau_sq.end(), tau);
    } else {
        for (std::size_t j = 0; j < scheme.m; ++j)
            out.tau_sq[j] = window_variance(profile, j * scheme.ell, scheme.ell);
    }
    out.tail_var = window_variance(profile, scheme.m * scheme.ell, scheme.r);
    out.nu_sq = pairwise_sum(out.tau_sq);
    return out;
}

// ---------------------------------------------------------------------------
// Streaming replicate summaries
// ---------------------------------------------------------------------------

// Per-replicate block sums, totals and per-variable truncated second-moment
// sums, built without keeping the paths. Deterministic under the one
// stream-per-replicate contract, independent of thread count.
struct BlockSumSample {
    BlockScheme scheme;
    std::size_t reps = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> block;       // reps x (m+1): m block sums, then the tail sum
    std::vector<double> totals;      // S_n per replicate
    std::vector<double> thresholds;  // per-variable truncation levels
    std::vector<double> trunc;       // reps x thresholds.size(): sum_j X_j^2 1{|X_j| >= thr}

    double block_sum(std::size_t rep, std::size_t j) const {
        return block[rep * (scheme.m + 1) + j];
    }
};

namespace detail {

inline void reduce_path(const BlockScheme& scheme, std::span<const double> values,
                        std::span<const double> thresholds, double* block_row,
                        double& total, double* trunc_row) {
    const std::size_t m = scheme.m, ell = scheme.ell;
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = j * ell; i < (j + 1) * ell; ++i) s += values[i];
        block_row[j] = s;
    }
    double tail = 0.0;
    for (std::size_t i = m * ell; i < scheme.n; ++i) tail += values[i];
    block_row[m] = tail;
    std::vector<double> parts(block_row, block_row + m + 1);
    total = pairwise_sum(parts);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        double s = 0.0;
        for (double x : values)
            if (std::abs(x) >= thresholds[t]) s += x * x;
        trunc_row[t] = s;
    }
}

}  // namespace detail

inline BlockSumSample build_block_sums(const FamilySpec& family, const BlockScheme& scheme,
                                       std::size_t reps, std::uint64_t master_seed,
                                       std::vector<double> thresholds = {},
                                       unsigned threads = 0) {
    if (reps < 1) throw std::invalid_argument("build_block_sums: reps must be >= 1");
    PathGenerator gen(family, scheme.n);
    BlockSumSample s;
    s.scheme = scheme;
    s.reps = reps;
    s.master_seed = master_seed;
    s.thresholds = std::move(thresholds);
    s.block.assign(reps * (scheme.m + 1), 0.0);
    s.totals.assign(reps, 0.0);
    s.trunc.assign(reps * s.thresholds.size(), 0.0);
    parallel_for_indices(reps, threads, [&](std::size_t i) {
        thread_local std::vector<double> buf;
        RngStream rng(master_seed, i);
        gen.fill(rng, buf);
        detail::reduce_path(s.scheme, buf, s.thresholds, &s.block[i * (scheme.m + 1)],
                            s.totals[i], s.trunc.empty() ? nullptr : &s.trunc[i * s.thresholds.size()]);
    });
    return s;
}

inline BlockSumSample block_sums_from(const ReplicateSet& reps, const BlockScheme& scheme,
                                      std::vector<double> thresholds = {}) {
    if (reps.reps < 1) throw std::invalid_argument("block_sums_from: empty replicate set");
    if (reps.n() != scheme.n)
        throw std::invalid_argument("block_sums_from: scheme does not match path length");
    BlockSumSample s;
    s.scheme = scheme;
    s.reps = reps.reps;
    s.master_seed = reps.master_seed;
    s.thresholds = std::move(thresholds);
    s.block.assign(reps.reps * (scheme.m + 1), 0.0);
    s.totals.assign(reps.reps, 0.0);
    s.trunc.assign(reps.reps * s.thresholds.size(), 0.0);
    for (std::size_t i = 0; i < reps.reps; ++i)
        detail::reduce_path(scheme, reps.paths[i].values, s.thresholds,
                            &s.block[i * (scheme.m + 1)], s.totals[i],
                            s.trunc.empty() ? nullptr : &s.trunc[i * s.thresholds.size()]);
    return s;
}

// Sample-variance block statistics; the j-th column of the sample estimates
// tau_j^2, the last column the tail variance.
inline BlockStats empirical_block_stats(const BlockSumSample& s) {
    if (s.reps < 2) throw std::invalid_argument("empirical_block_stats: need reps >= 2");
    BlockStats out;
    out.scheme = s.scheme;
    out.source = ProfileSource::empirical;
    const std::size_t cols = s.scheme.m + 1;
    std::vector<double> col(s.reps);
    out.tau_sq.resize(s.scheme.m);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i < s.reps; ++i) col[i] = s.block[i * cols + j];
        const double v = sample_variance(col);
        if (j < s.scheme.m)
            out.tau_sq[j] = v;
        else
            out.tail_var = s.scheme.r == 0 ? 0.0 : v;
    }
    out.nu_sq = pairwise_sum(out.tau_sq);
    return out;
}

inline double empirical_s_n_squared(const BlockSumSample& s) {
    return sample_variance(s.totals);
}

// ---------------------------------------------------------------------------
// Condition values, reports and verdicts
// ---------------------------------------------------------------------------

struct ConditionValue {
    std::string condition_id;
    std::size_t n = 0;  // grid coordinate (n, or the distance r for CoxA2)
    double value = 0.0;
    double target = 0.0;
    double stderr_ = 0.0;   // 0 for analytic values
    bool analytic = true;
    std::string warning;    // nonempty when an analytic request fell back

    ConditionValue() = default;
    ConditionValue(std::string id, std::size_t coord, double v, double t, double se = 0.0,
                   bool an = true)
        : condition_id(std::move(id)), n(coord), value(v), target(t), stderr_(se), analytic(an) {
        if (!std::isfinite(v))
            throw std::runtime_error("condition value not finite: " + condition_id);
    }
};

enum class Verdict { holds_empirically, fails_empirically, inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::holds_empirically: return "holds_empirically";
        case Verdict::fails_empirically: return "fails_empirically";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

// Decision rule families. `limit` tracks |value - target| toward the limit;
// `lower_bounded` requires the value to stay above limit_tol without
// decaying; `bounded` requires a non-growing trajectory.
enum class VerdictRule { limit, lower_bounded, bounded };

inline std::string to_string(VerdictRule r) {
    switch (r) {
        case VerdictRule::limit: return "limit";
        case VerdictRule::lower_bounded: return "lower_bounded";
        case VerdictRule::bounded: return "bounded";
    }
    return "?";
}

// All verdict thresholds are artifact policy and are carried inside every
// report. monotone_floor treats distances already this close to the target
// as "at target" in the monotone-last-3 check; flat_slope separates decaying
// trends from flat or diverging ones.
struct VerdictThresholds {
    double limit_tol = 0.05;
    double monotone_floor = 0.005;  // limit_tol / 10 by default
    double flat_slope = 0.05;
};

struct ConditionReport {
    std::string condition_id;
    std::string coordinate = "n";
    std::vector<ConditionValue> grid;
    Verdict verdict = Verdict::inconclusive;
    VerdictRule rule = VerdictRule::limit;
    VerdictThresholds thresholds;
    double trend_slope = 0.0;  // least squares of log|value - target| on log coord
};

namespace detail {

inline double trend_slope(const std::vector<ConditionValue>& grid) {
    std::vector<double> xs, ys;
    for (const auto& cv : grid) {
        const double d = std::abs(cv.value - cv.target);
        if (d > 0.0 && cv.n > 0) {
            xs.push_back(std::log(static_cast<double>(cv.n)));
            ys.push_back(std::log(d));
        }
    }
    if (xs.size() < 2) return 0.0;
    const double mx = mean_of(xs), my = mean_of(ys);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    return den > 0.0 ? num / den : 0.0;
}

inline bool monotone_toward_target(const std::vector<ConditionValue>& grid,
                                   double floor_value) {
    const std::size_t k = grid.size();
    const std::size_t first = k > 3 ? k - 3 : 0;
    for (std::size_t i = first + 1; i < k; ++i) {
        const double prev = std::abs(grid[i - 1].value - grid[i - 1].target);
        const double cur = std::abs(grid[i].value - grid[i].target);
        if (cur > floor_value && cur > prev * (1.0 + 1e-12)) return false;
    }
    return true;
}

}  // namespace detail

inline ConditionReport make_condition_report(std::string id, std::vector<ConditionValue> grid,
                                             const VerdictThresholds& th,
                                             VerdictRule rule = VerdictRule::limit,
                                             std::string coordinate = "n") {
    if (grid.empty()) throw std::invalid_argument("make_condition_report: empty grid");
    ConditionReport rep;
    rep.condition_id = std::move(id);
    rep.coordinate = std::move(coordinate);
    rep.grid = std::move(grid);
    rep.rule = rule;
    rep.thresholds = th;
    rep.trend_slope = detail::trend_slope(rep.grid);

    const ConditionValue& last = rep.grid.back();
    const double d_last = std::abs(last.value - last.target);
    switch (rule) {
        case VerdictRule::limit: {
            if (d_last < th.limit_tol &&
                detail::monotone_toward_target(rep.grid, th.monotone_floor))
                rep.verdict = Verdict::holds_empirically;
            else if (d_last > 2.0 * th.limit_tol && rep.trend_slope >= -th.flat_slope)
                rep.verdict = Verdict::fails_empirically;
            else
                rep.verdict = Verdict::inconclusive;
            break;
        }
        case VerdictRule::lower_bounded: {
            double vmin = std::numeric_limits<double>::infinity();
            for (const auto& cv : rep.grid) vmin = std::min(vmin, cv.value);
            if (vmin > th.limit_tol && rep.trend_slope >= -th.flat_slope)
                rep.verdict = Verdict::holds_empirically;
            else if (vmin < 0.5 * th.limit_tol || rep.trend_slope < -0.25)
                rep.verdict = Verdict::fails_empirically;
            else
                rep.verdict = Verdict::inconclusive;
            break;
        }
        case VerdictRule::bounded: {
            const double first = std::abs(rep.grid.front().value);
            const double final = std::abs(last.value);
            if (rep.trend_slope <= th.flat_slope)
                rep.verdict = Verdict::holds_empirically;
            else if (rep.trend_slope > 0.25 && final > 2.0 * first)
                rep.verdict = Verdict::fails_empirically;
            else
                rep.verdict = Verdict::inconclusive;
            break;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Point evaluators
// ---------------------------------------------------------------------------

namespace detail {
inline void require_positive(double s_n_sq, const char* who) {
    if (!(s_n_sq > 0.0))
        throw std::runtime_error(std::string(who) + ": degenerate s_n^2 = 0");
}
}  // namespace detail

inline ConditionValue eval_H0(const CovarianceProfile& profile, const BlockScheme& scheme) {
    const double snsq = s_n_squared(profile);
    detail::require_positive(snsq, "eval_H0");
    return {"H0", scheme.n, static_cast<double>(scheme.ell) / snsq, 0.0};
}

inline ConditionValue eval_Ha(const BlockStats& stats, double s_n_sq) {
    detail::require_positive(s_n_sq, "eval_Ha");
    return {"Ha", stats.scheme.n, stats.nu_sq / s_n_sq, 1.0};
}

inline ConditionValue eval_Hab(const BlockStats& stats, double s_n_sq) {
    detail::require_positive(s_n_sq, "eval_Hab");
    return {"Hab", stats.scheme.n, stats.tail_var / s_n_sq, 0.0};
}

inline ConditionValue eval_Hb(const BlockStats& stats, double s_n_sq) {
    detail::require_positive(s_n_sq, "eval_Hb");
    double worst = stats.tail_var;  // the tail enters as the (m+1)-th block
    for (double t : stats.tau_sq) worst = std::max(worst, t);
    return {"Hb", stats.scheme.n, worst / s_n_sq, 0.0};
}

inline ConditionValue eval_feller_max(const BlockStats& stats, double s_n_sq) {
    detail::require_positive(s_n_sq, "eval_feller_max");
    double worst = 0.0;
    for (double t : stats.tau_sq) worst = std::max(worst, t);
    return {"FellerMax", stats.scheme.n, worst / s_n_sq, 0.0};
}

// C2(n): the Lyapounov functional of the blocks. The default prefactor is
// l^{(2+delta)/2}, which collapses to sum_j E|B_j|^{2+delta} / s_n^{2+delta};
// `literal` keeps the l^{3/2} prefactor for any delta (identical at
// delta = 1).
inline ConditionValue eval_Hc_analytic(const BlockStats& stats, double s_n_sq, double delta,
                                       bool literal = false) {
    detail::require_positive(s_n_sq, "eval_Hc");
    if (!(delta > 0.0)) throw std::invalid_argument("eval_Hc: delta must be > 0");
    const double p = 2.0 + delta;
    const double kappa = gaussian_abs_moment(p);
    double sum = 0.0;
    for (double tau2 : stats.tau_sq) sum += kappa * std::pow(tau2, 0.5 * p);
    double value = sum / std::pow(s_n_sq, 0.5 * p);
    if (literal)
        value *= std::pow(static_cast<double>(stats.scheme.ell), 0.5 * (1.0 - delta));
    return {"Hc", stats.scheme.n, value, 0.0};
}

inline ConditionValue eval_Hc_empirical(const BlockSumSample& sample, double s_n_sq,
                                        double delta, bool literal = false) {
    detail::require_positive(s_n_sq, "eval_Hc");
    if (!(delta > 0.0)) throw std::invalid_argument("eval_Hc: delta must be > 0");
    if (sample.reps < 2) throw std::invalid_argument("eval_Hc: need reps >= 2");
    const double p = 2.0 + delta;
    const std::size_t cols = sample.scheme.m + 1;
    std::vector<double> per_rep(sample.reps, 0.0);
    for (std::size_t i = 0; i < sample.reps; ++i) {
        double t = 0.0;
        for (std::size_t j = 0; j < sample.scheme.m; ++j)
            t += std::pow(std::abs(sample.block[i * cols + j]), p);
        per_rep[i] = t;
    }
    const double scale = (literal ? std::pow(static_cast<double>(sample.scheme.ell),
                                             0.5 * (1.0 - delta))
                                  : 1.0) /
                         std::pow(s_n_sq, 0.5 * p);
    const double m = mean_of(per_rep);
    const double se = std::sqrt(sample_variance(per_rep) / static_cast<double>(sample.reps));
    ConditionValue cv("Hc", sample.scheme.n, m * scale, 0.0, se * scale, false);
    return cv;
}

enum class LindebergNormalizer { nu, s_n };

// Block Lindeberg functional
//     (1/s_n^2) sum_{j=1}^m E[B_j^2 1{|B_j| >= eps * (nu or s_n)}].
inline ConditionValue eval_lindeberg_blocks(const BlockSumSample& sample, double s_n_sq,
                                            double eps, LindebergNormalizer norm,
                                            double nu_sq) {
    detail::require_positive(s_n_sq, "eval_lindeberg_blocks");
    if (!(eps > 0.0)) throw std::invalid_argument("eval_lindeberg_blocks: eps must be > 0");
    if (sample.reps < 1000)
        throw std::invalid_argument("eval_lindeberg_blocks: need reps >= 1e3");
    const double scale = norm == LindebergNormalizer::nu ? std::sqrt(nu_sq) : std::sqrt(s_n_sq);
    const double thr = eps * scale;
    const std::size_t cols = sample.scheme.m + 1;
    std::vector<double> per_rep(sample.reps, 0.0);
    for (std::size_t i = 0; i < sample.reps; ++i) {
        double t = 0.0;
        for (std::size_t j = 0; j < sample.scheme.m; ++j) {
            const double b = sample.block[i * cols + j];
            if (std::abs(b) >= thr) t += b * b;
        }
        per_rep[i] = t;
    }
    const double m = mean_of(per_rep);
    const double se = sample.reps > 1
                          ? std::sqrt(sample_variance(per_rep) / static_cast<double>(sample.reps))
                          : 0.0;
    const std::string id =
        norm == LindebergNormalizer::nu ? "LindebergNu" : "LindebergSn";
    return {id, sample.scheme.n, m / s_n_sq, 0.0, se / s_n_sq, false};
}

// Closed form for Gaussian blocks, used both as the analytic evaluator and
// as the oracle the Monte Carlo route is tested against.
inline ConditionValue eval_lindeberg_blocks_analytic(const BlockStats& stats, double s_n_sq,
                                                     double eps, LindebergNormalizer norm) {
    detail::require_positive(s_n_sq, "eval_lindeberg_blocks");
    if (!(eps > 0.0)) throw std::invalid_argument("eval_lindeberg_blocks: eps must be > 0");
    const double scale =
        norm == LindebergNormalizer::nu ? std::sqrt(stats.nu_sq) : std::sqrt(s_n_sq);
    const double thr = eps * scale;
    double sum = 0.0;
    for (double tau2 : stats.tau_sq) sum += gaussian_trunc_second_moment(tau2, thr);
    const std::string id =
        norm == LindebergNormalizer::nu ? "LindebergNu" : "LindebergSn";
    return {id, stats.scheme.n, sum / s_n_sq, 0.0};
}

// (1/s_n^2) sum_{i=t..u} Var(X_i); 1-based inclusive window of length at
// most l(n).
inline ConditionValue eval_HNab(const CovarianceProfile& profile, std::size_t t, std::size_t u,
                                double s_n_sq, const BlockScheme& scheme) {
    detail::require_positive(s_n_sq, "eval_HNab");
    if (t < 1 || t > u || u > profile.n || u - t > scheme.ell)
        throw std::invalid_argument("eval_HNab: window violates preconditions");
    double sum = 0.0;
    for (std::size_t i = t; i <= u; ++i) sum += profile.entry(i - 1, i - 1);
    return {"HNab", scheme.n, sum / s_n_sq, 0.0};
}

inline ConditionValue eval_L(const BlockScheme& scheme) {
    return {"L", scheme.n,
            static_cast<double>(scheme.ell) / static_cast<double>(scheme.n), 0.0};
}

// Per-variable Lindeberg functional of Oliveira's Feller-Levy route,
//     (1/s_n^2) sum_{j=1}^n E[X_j^2 1{|X_j| >= eps s_n}],
// summed over all n variables.
inline ConditionValue eval_lindeberg_vars(const BlockSumSample& sample, double s_n_sq,
                                          std::size_t threshold_index) {
    detail::require_positive(s_n_sq, "eval_lindeberg_vars");
    if (sample.thresholds.empty() || threshold_index >= sample.thresholds.size())
        throw std::invalid_argument("eval_lindeberg_vars: sample lacks the threshold column");
    const std::size_t cols = sample.thresholds.size();
    std::vector<double> per_rep(sample.reps);
    for (std::size_t i = 0; i < sample.reps; ++i) per_rep[i] = sample.trunc[i * cols + threshold_index];
    const double m = mean_of(per_rep);
    const double se = sample.reps > 1
                          ? std::sqrt(sample_variance(per_rep) / static_cast<double>(sample.reps))
                          : 0.0;
    return {"PauloB3", sample.scheme.n, m / s_n_sq, 0.0, se / s_n_sq, false};
}

inline ConditionValue eval_lindeberg_vars_analytic(const FamilySpec& family,
                                                   const CovarianceProfile& profile,
                                                   double s_n_sq, double eps) {
    detail::require_positive(s_n_sq, "eval_lindeberg_vars");
    if (!family_is_gaussian(family))
        throw std::invalid_argument("eval_lindeberg_vars: analytic mode needs Gaussian marginals");
    const double thr = eps * std::sqrt(s_n_sq);
    const double per_var = gaussian_trunc_second_moment(profile.gamma[0], thr);
    return {"PauloB3", profile.n, static_cast<double>(profile.n) * per_var / s_n_sq, 0.0};
}

}  // namespace assoclt
