#pragma once

// Analytic and empirical covariance structure, the scalars the theorems
// condition on (s_n^2, sigma^2, u(r)), the Hoeffding H-integral oracle, and
// statistical probes of the association / demimartingale inequalities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "assoclt/math.hpp"
#include "assoclt/model.hpp"

namespace assoclt {

// ---------------------------------------------------------------------------
// Covariance profiles
// ---------------------------------------------------------------------------

enum class ProfileSource { analytic, empirical };

// Either a stationary autocovariance vector gamma(0..n-1) or a full
// symmetric matrix (empirical profiles). Analytic profiles of every built-in
// family are stationary.
struct CovarianceProfile {
    std::size_t n = 0;
    ProfileSource source = ProfileSource::analytic;
    bool stationary = true;
    std::vector<double> gamma;          // length n when stationary
    std::vector<double> matrix;         // n*n row-major otherwise
    std::vector<double> stderr_matrix;  // per-entry standard errors (empirical)
    std::size_t reps = 0;               // empirical provenance

    double entry(std::size_t i, std::size_t j) const {
        if (stationary) return gamma[i >= j ? i - j : j - i];
        return matrix[i * n + j];
    }

    static CovarianceProfile from_gamma(std::vector<double> g) {
        CovarianceProfile p;
        p.n = g.size();
        p.gamma = std::move(g);
        return p;
    }
};

// Stationary autocovariance gamma(0..n-1) of a family; affine transforms
// scale the base profile, other transforms have no closed form here.
inline std::vector<double> stationary_gamma(const FamilySpec& f, std::size_t n) {
    std::vector<double> g(n, 0.0);
    switch (f.kind) {
        case FamilyKind::iid:
            g[0] = f.dist.variance();
            break;
        case FamilyKind::gaussian_cov:
            for (std::size_t k = 0; k < n; ++k) g[k] = f.autocov.at(k);
            break;
        case FamilyKind::moving_average: {
            const double ve = f.dist.variance();
            const std::size_t q = f.weights.size();
            for (std::size_t h = 0; h < std::min(n, q); ++h) {
                double s = 0.0;
                for (std::size_t k = 0; k + h < q; ++k) s += f.weights[k] * f.weights[k + h];
                g[h] = ve * s;
            }
            break;
        }
        case FamilyKind::common_factor: {
            const double v = f.dist.variance();
            std::fill(g.begin(), g.end(), v);
            break;
        }
        case FamilyKind::markov_two_state: {
            const double p1 = markov_stationary_p1(f);
            const double lambda = f.p_stay0 + f.p_stay1 - 1.0;
            const double v = p1 * (1.0 - p1);
            double pw = 1.0;
            for (std::size_t k = 0; k < n; ++k) {
                g[k] = v * pw;
                pw *= lambda;
            }
            break;
        }
        case FamilyKind::monotone_transform: {
            if (!f.base || f.map.name != MapName::affine)
                throw std::invalid_argument(
                    "analytic profile unavailable for non-affine monotone transforms");
            g = stationary_gamma(*f.base, n);
            const double a2 = f.map.slope * f.map.slope;
            for (auto& x : g) x *= a2;
            break;
        }
    }
    return g;
}

inline bool has_analytic_profile(const FamilySpec& f) {
    if (f.kind == FamilyKind::monotone_transform)
        return f.base && f.map.name == MapName::affine && has_analytic_profile(*f.base);
    return true;
}

// Linear (Gaussian-marginal) families: every block sum is exactly normal.
inline bool family_is_gaussian(const FamilySpec& f) {
    switch (f.kind) {
        case FamilyKind::iid:
        case FamilyKind::common_factor:
        case FamilyKind::moving_average: return f.dist.gaussian();
        case FamilyKind::gaussian_cov: return true;
        case FamilyKind::markov_two_state: return false;
        case FamilyKind::monotone_transform:
            return f.base && f.map.name == MapName::affine && family_is_gaussian(*f.base);
    }
    return false;
}

// E|X_j|^3 of the stationary marginal, where a closed form exists.
inline std::optional<double> marginal_abs_third_moment(const FamilySpec& f) {
    switch (f.kind) {
        case FamilyKind::iid:
        case FamilyKind::common_factor: return f.dist.abs_third_moment();
        case FamilyKind::gaussian_cov:
            return gaussian_abs_moment(3.0) * std::pow(f.autocov.at(0), 1.5);
        case FamilyKind::moving_average: {
            if (!f.dist.gaussian()) return std::nullopt;
            const double g0 = stationary_gamma(f, 1)[0];
            return gaussian_abs_moment(3.0) * std::pow(g0, 1.5);
        }
        case FamilyKind::markov_two_state: {
            const double p1 = markov_stationary_p1(f);
            if (!f.centered) return p1;  // |X|^3 = X on {0,1}
            const double q = 1.0 - p1;
            return p1 * q * (q * q + p1 * p1);
        }
        case FamilyKind::monotone_transform: {
            if (!f.base || f.map.name != MapName::affine || f.map.intercept != 0.0)
                return std::nullopt;
            auto base = marginal_abs_third_moment(*f.base);
            if (!base) return std::nullopt;
            return f.map.slope * f.map.slope * f.map.slope * *base;
        }
    }
    return std::nullopt;
}

inline CovarianceProfile analytic_profile(const FamilySpec& family, std::size_t n) {
    CovarianceProfile p = CovarianceProfile::from_gamma(stationary_gamma(family, n));
    p.source = ProfileSource::analytic;
    return p;
}

// Unbiased sample covariance across replicates with per-entry standard
// errors. Quadratic in n; guarded to desk-scale inputs.
inline CovarianceProfile empirical_profile(const ReplicateSet& reps) {
    if (reps.reps < 2) throw std::invalid_argument("empirical_profile: need reps >= 2");
    const std::size_t n = reps.n();
    if (n > 2048)
        throw std::invalid_argument("empirical_profile: n > 2048 exceeds the desk-scale guard");
    const std::size_t R = reps.reps;

    std::vector<double> mean(n, 0.0);
    for (const auto& path : reps.paths)
        for (std::size_t i = 0; i < n; ++i) mean[i] += path.values[i];
    for (auto& m : mean) m /= static_cast<double>(R);

    CovarianceProfile p;
    p.n = n;
    p.source = ProfileSource::empirical;
    p.stationary = false;
    p.reps = R;
    p.matrix.assign(n * n, 0.0);
    p.stderr_matrix.assign(n * n, 0.0);
    std::vector<double> sum_sq(n * n, 0.0);
    std::vector<double> centered(n);
    for (const auto& path : reps.paths) {
        for (std::size_t i = 0; i < n; ++i) centered[i] = path.values[i] - mean[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                const double prod = centered[i] * centered[j];
                p.matrix[i * n + j] += prod;
                sum_sq[i * n + j] += prod * prod;
            }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double total = p.matrix[i * n + j];
            const double cov = total / static_cast<double>(R - 1);
            const double mean_prod = total / static_cast<double>(R);
            const double var_prod =
                std::max(0.0, (sum_sq[i * n + j] / R - mean_prod * mean_prod));
            const double se = std::sqrt(var_prod / static_cast<double>(R));
            p.matrix[i * n + j] = p.matrix[j * n + i] = cov;
            p.stderr_matrix[i * n + j] = p.stderr_matrix[j * n + i] = se;
        }
    return p;
}

// ---------------------------------------------------------------------------
// Derived scalars
// ---------------------------------------------------------------------------

// Var(X_a + ... + X_{a+len-1}); stationary profiles ignore the offset.
inline double window_variance(const CovarianceProfile& p, std::size_t start, std::size_t len) {
    if (len == 0) return 0.0;
    if (start + len > p.n) throw std::invalid_argument("window_variance: window exceeds profile");
    if (p.stationary) {
        double s = static_cast<double>(len) * p.gamma[0];
        for (std::size_t k = 1; k < len; ++k)
            s += 2.0 * static_cast<double>(len - k) * p.gamma[k];
        return s;
    }
    double s = 0.0;
    for (std::size_t i = start; i < start + len; ++i)
        for (std::size_t j = start; j < start + len; ++j) s += p.entry(i, j);
    return s;
}

// Var(S_n) as the full double sum over the profile.
inline double s_n_squared(const CovarianceProfile& p) { return window_variance(p, 0, p.n); }

struct LongRunVariance {
    bool finite = true;
    double value = 0.0;  // sigma^2 = gamma(0) + 2 * sum_{k>=1} gamma(k)
};

inline LongRunVariance long_run_variance(const FamilySpec& f) {
    switch (f.kind) {
        case FamilyKind::iid: return {true, f.dist.variance()};
        case FamilyKind::gaussian_cov: {
            const auto& ac = f.autocov;
            if (ac.rule == AutocovRule::geometric)
                return {true, ac.var * (1.0 + ac.rho) / (1.0 - ac.rho)};
            double s = ac.values.empty() ? 0.0 : ac.values[0];
            for (std::size_t k = 1; k < ac.values.size(); ++k) s += 2.0 * ac.values[k];
            return {true, s};
        }
        case FamilyKind::moving_average: {
            // sigma^2 = Var(eps) * (sum w_k)^2 for a finite-support MA.
            double w = 0.0;
            for (double wk : f.weights) w += wk;
            return {true, f.dist.variance() * w * w};
        }
        case FamilyKind::common_factor:
            return {false, std::numeric_limits<double>::infinity()};
        case FamilyKind::markov_two_state: {
            const double p1 = markov_stationary_p1(f);
            const double lambda = f.p_stay0 + f.p_stay1 - 1.0;
            if (lambda >= 1.0) return {false, std::numeric_limits<double>::infinity()};
            return {true, p1 * (1.0 - p1) * (1.0 + lambda) / (1.0 - lambda)};
        }
        case FamilyKind::monotone_transform: {
            if (!f.base || f.map.name != MapName::affine)
                throw std::invalid_argument(
                    "long_run_variance unavailable for non-affine monotone transforms");
            auto base = long_run_variance(*f.base);
            return {base.finite, f.map.slope * f.map.slope * base.value};
        }
    }
    throw std::invalid_argument("unknown family kind");
}

// Cox coefficient over the finite window 1..n:
//     u(r) = max_j sum_{i: |i-j| >= r} Cov(X_i, X_j).
inline double cox_coefficient(const CovarianceProfile& p, std::size_t r) {
    const std::size_t n = p.n;
    if (p.stationary) {
        // prefix[L] = sum_{k=1}^{L} gamma(k); row sums then cost O(1) each.
        std::vector<double> prefix(n, 0.0);
        for (std::size_t k = 1; k < n; ++k) prefix[k] = prefix[k - 1] + p.gamma[k];
        const std::size_t lo = std::max<std::size_t>(r, 1);
        auto tail_sum = [&](std::size_t len) {
            if (len < lo) return 0.0;
            return prefix[len] - prefix[lo - 1];
        };
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            double row = tail_sum(j) + tail_sum(n - 1 - j);
            if (r == 0) row += p.gamma[0];
            best = std::max(best, row);
        }
        return best;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        double row = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t d = i >= j ? i - j : j - i;
            if (d >= r) row += p.entry(i, j);
        }
        best = std::max(best, row);
    }
    return best;
}

// Infinite-window closed form where the family admits one, so truncation
// bias of the finite-window value is visible. Divergent cases report +inf.
inline std::optional<double> cox_coefficient_infinite(const FamilySpec& f, std::size_t r) {
    switch (f.kind) {
        case FamilyKind::iid:
            return r == 0 ? f.dist.variance() : 0.0;
        case FamilyKind::gaussian_cov: {
            const auto& ac = f.autocov;
            if (ac.rule == AutocovRule::geometric) {
                if (ac.rho >= 1.0) return std::numeric_limits<double>::infinity();
                const std::size_t lo = std::max<std::size_t>(r, 1);
                const double tail =
                    2.0 * ac.var * std::pow(ac.rho, static_cast<double>(lo)) / (1.0 - ac.rho);
                return r == 0 ? ac.var + tail : tail;
            }
            double tail = 0.0;
            for (std::size_t k = std::max<std::size_t>(r, 1); k < ac.values.size(); ++k)
                tail += 2.0 * ac.values[k];
            return r == 0 ? (ac.values.empty() ? 0.0 : ac.values[0]) + tail : tail;
        }
        case FamilyKind::moving_average: {
            const auto g = stationary_gamma(f, f.weights.size());
            double tail = 0.0;
            for (std::size_t k = std::max<std::size_t>(r, 1); k < g.size(); ++k)
                tail += 2.0 * g[k];
            return r == 0 ? g[0] + tail : tail;
        }
        case FamilyKind::common_factor:
            return std::numeric_limits<double>::infinity();
        case FamilyKind::markov_two_state: {
            const double p1 = markov_stationary_p1(f);
            const double lambda = f.p_stay0 + f.p_stay1 - 1.0;
            if (lambda >= 1.0) return std::numeric_limits<double>::infinity();
            const double v = p1 * (1.0 - p1);
            const std::size_t lo = std::max<std::size_t>(r, 1);
            const double tail =
                2.0 * v * std::pow(lambda, static_cast<double>(lo)) / (1.0 - lambda);
            return r == 0 ? v + tail : tail;
        }
        case FamilyKind::monotone_transform: {
            if (!f.base || f.map.name != MapName::affine) return std::nullopt;
            auto base = cox_coefficient_infinite(*f.base, r);
            if (!base) return std::nullopt;
            return f.map.slope * f.map.slope * *base;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Hoeffding covariance oracle
// ---------------------------------------------------------------------------

struct DiscreteBivariate {
    struct Atom {
        double x, y, p;
    };
    std::vector<Atom> atoms;
};

// Exact Cov(X, Y) = integral of H(x,y) = P(X>x, Y>y) - P(X>x)P(Y>y) over the
// plane. H is piecewise constant on the grid spanned by the support, so the
// integral is a finite sum of cell areas.
inline double hoeffding_cov(const DiscreteBivariate& joint, double prob_tol = 1e-10) {
    if (joint.atoms.empty()) throw std::invalid_argument("hoeffding_cov: empty support");
    double total = 0.0;
    for (const auto& a : joint.atoms) total += a.p;
    if (std::abs(total - 1.0) > prob_tol)
        throw std::invalid_argument("hoeffding_cov: probabilities sum to " + std::to_string(total));

    std::vector<double> xs, ys;
    for (const auto& a : joint.atoms) {
        xs.push_back(a.x);
        ys.push_back(a.y);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        for (std::size_t l = 0; l + 1 < ys.size(); ++l) {
            double joint_tail = 0.0, x_tail = 0.0, y_tail = 0.0;
            for (const auto& a : joint.atoms) {
                const bool gx = a.x > xs[k];
                const bool gy = a.y > ys[l];
                if (gx && gy) joint_tail += a.p;
                if (gx) x_tail += a.p;
                if (gy) y_tail += a.p;
            }
            const double h = joint_tail - x_tail * y_tail;
            integral += h * (xs[k + 1] - xs[k]) * (ys[l + 1] - ys[l]);
        }
    }
    return integral;
}

// ---------------------------------------------------------------------------
// Empirical covariance with standard error
// ---------------------------------------------------------------------------

struct CovEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

inline CovEstimate empirical_cov(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t r = xs.size();
    if (r != ys.size() || r < 2) throw std::invalid_argument("empirical_cov: bad sample");
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    std::vector<double> prod(r);
    for (std::size_t i = 0; i < r; ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
    const double sum = pairwise_sum(prod);
    const double cov = sum / static_cast<double>(r - 1);
    const double mean_prod = sum / static_cast<double>(r);
    std::vector<double> sq(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double d = prod[i] - mean_prod;
        sq[i] = d * d;
    }
    const double var_prod = pairwise_sum(sq) / static_cast<double>(r - 1);
    return {cov, std::sqrt(var_prod / static_cast<double>(r))};
}

// ---------------------------------------------------------------------------
// Monotone test battery and the statistical probes
// ---------------------------------------------------------------------------

struct BatteryPair {
    MonotoneMap f, g;
    std::string label;

    double f_bound() const { return f.derivative_bound(); }
    double g_bound() const { return g.derivative_bound(); }
};

struct MonotoneTestBattery {
    std::vector<BatteryPair> pairs;
};

inline MonotoneTestBattery default_battery() {
    MonotoneTestBattery b;
    const MonotoneMap id = MonotoneMap::identity();
    MonotoneMap th;
    th.name = MapName::tanh_scaled;
    th.scale = 1.0;
    MonotoneMap aff2;
    aff2.slope = 2.0;
    MonotoneMap pwl;
    pwl.name = MapName::piecewise_linear;
    pwl.knots_x = {-2.0, -1.0, 0.0, 1.0, 2.0};
    pwl.knots_y = {-1.0, -0.8, 0.0, 1.2, 1.5};
    b.pairs = {{id, id, "id,id"},
               {th, th, "tanh,tanh"},
               {th, id, "tanh,id"},
               {aff2, th, "affine2,tanh"},
               {pwl, id, "pwl,id"}};
    return b;
}

// Grid check that a registered map really is nondecreasing and that its
// recorded derivative bound dominates every finite-difference slope.
inline bool map_nondecreasing_on_grid(const MonotoneMap& m, double lo = -8.0, double hi = 8.0,
                                      std::size_t points = 4096) {
    double prev = m(lo);
    const double bound = m.derivative_bound();
    const double step = (hi - lo) / static_cast<double>(points);
    for (std::size_t i = 1; i <= points; ++i) {
        const double x = lo + step * static_cast<double>(i);
        const double cur = m(x);
        if (cur < prev - 1e-12) return false;
        if ((cur - prev) / step > bound * (1.0 + 1e-9) + 1e-12) return false;
        prev = cur;
    }
    return true;
}

struct FunctionalCheck {
    double lhs = 0.0;      // |Cov(f(X), g(Y))|
    double rhs = 0.0;      // ||f'|| * ||g'|| * Cov(X, Y)
    double margin = 0.0;   // rhs - lhs
    double stderr_ = 0.0;  // combined standard error of the margin
    bool holds = false;
};

// Checks |Cov(f(X), g(Y))| <= ||f'|| ||g'|| Cov(X, Y) on samples of an
// associated pair, at a 3-sigma statistical slack.
inline FunctionalCheck newman_functional_check(std::span<const double> xs,
                                               std::span<const double> ys,
                                               const BatteryPair& pair) {
    if (xs.size() < 1000) throw std::invalid_argument("newman_functional_check: need >= 1e3 samples");
    if (!all_finite(xs) || !all_finite(ys))
        throw std::invalid_argument("newman_functional_check: non-finite sample values");
    std::vector<double> fx(xs.size()), gy(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        fx[i] = pair.f(xs[i]);
        gy[i] = pair.g(ys[i]);
    }
    const CovEstimate lhs_est = empirical_cov(fx, gy);
    const CovEstimate cov_est = empirical_cov(xs, ys);
    const double scale = pair.f_bound() * pair.g_bound();
    FunctionalCheck out;
    out.lhs = std::abs(lhs_est.value);
    out.rhs = scale * cov_est.value;
    out.margin = out.rhs - out.lhs;
    out.stderr_ = std::sqrt(lhs_est.stderr_ * lhs_est.stderr_ +
                            scale * scale * cov_est.stderr_ * cov_est.stderr_);
    out.holds = out.lhs <= out.rhs + 3.0 * out.stderr_;
    return out;
}

struct ProbeValue {
    std::string label;
    double value = 0.0;
    double stderr_ = 0.0;
};

struct ProbeReport {
    double min_value = 0.0;
    double min_stderr = 0.0;
    bool violation = false;
    std::vector<ProbeValue> values;
};

namespace detail {

enum class Aggregate { first, last, sum, max };

inline double aggregate(Aggregate a, std::span<const double> xs) {
    switch (a) {
        case Aggregate::first: return xs.front();
        case Aggregate::last: return xs.back();
        case Aggregate::sum: return pairwise_sum(xs);
        case Aggregate::max: return *std::max_element(xs.begin(), xs.end());
    }
    return 0.0;
}

inline const char* aggregate_name(Aggregate a) {
    switch (a) {
        case Aggregate::first: return "first";
        case Aggregate::last: return "last";
        case Aggregate::sum: return "sum";
        case Aggregate::max: return "max";
    }
    return "?";
}

}  // namespace detail

// Evaluates Cov(f(A(X)), g(B(X))) across replicates, where A, B range over a
// fixed set of coordinatewise-nondecreasing aggregators (first/last
// coordinate, sum, max) and (f, g) over the battery. Composites of
// nondecreasing maps stay nondecreasing, so association requires every value
// to be nonnegative up to noise; a value below -3 stderr flags a violation.
inline ProbeReport association_probe(const ReplicateSet& reps, const MonotoneTestBattery& battery) {
    if (reps.reps < 1000) throw std::invalid_argument("association_probe: need reps >= 1e3");
    using detail::Aggregate;
    static constexpr std::pair<Aggregate, Aggregate> kAggPairs[] = {
        {Aggregate::first, Aggregate::last},
        {Aggregate::sum, Aggregate::sum},
        {Aggregate::first, Aggregate::sum},
        {Aggregate::max, Aggregate::sum},
        {Aggregate::last, Aggregate::first}};

    ProbeReport report;
    report.min_value = std::numeric_limits<double>::infinity();
    std::vector<double> lhs(reps.reps), rhs(reps.reps);
    for (const auto& pair : battery.pairs) {
        for (const auto& [agg_f, agg_g] : kAggPairs) {
            for (std::size_t i = 0; i < reps.reps; ++i) {
                const auto& v = reps.paths[i].values;
                lhs[i] = pair.f(detail::aggregate(agg_f, v));
                rhs[i] = pair.g(detail::aggregate(agg_g, v));
            }
            const CovEstimate est = empirical_cov(lhs, rhs);
            ProbeValue pv;
            pv.label = pair.label + " @ " + detail::aggregate_name(agg_f) + "," +
                       detail::aggregate_name(agg_g);
            pv.value = est.value;
            pv.stderr_ = est.stderr_;
            if (est.value < report.min_value) {
                report.min_value = est.value;
                report.min_stderr = est.stderr_;
            }
            if (est.value < -3.0 * est.stderr_) report.violation = true;
            report.values.push_back(std::move(pv));
        }
    }
    return report;
}

inline bool family_centered(const FamilySpec& f) {
    switch (f.kind) {
        case FamilyKind::iid:
        case FamilyKind::gaussian_cov:
        case FamilyKind::moving_average:
        case FamilyKind::common_factor: return true;
        case FamilyKind::markov_two_state: return f.centered;
        case FamilyKind::monotone_transform:
            return f.recenter || (f.base && family_centered(*f.base) && f.map.name == MapName::affine &&
                                  f.map.intercept == 0.0);
    }
    return false;
}

// E[(S_{j+1} - S_j) g(S_1, ..., S_j)] >= 0 for nondecreasing g: the
// demimartingale inequality of centered associated partial sums. The g
// battery maps the prefix through its last element, its running max, and
// tanh of the last element.
inline ProbeReport demimartingale_probe(const ReplicateSet& reps) {
    if (reps.reps < 1000) throw std::invalid_argument("demimartingale_probe: need reps >= 1e3");
    if (reps.paths.empty() || !family_centered(reps.paths.front().family))
        throw std::invalid_argument("demimartingale_probe: family must be centered");
    const std::size_t n = reps.n();
    if (n < 2) throw std::invalid_argument("demimartingale_probe: need n >= 2");

    struct GEntry {
        std::string name;
        double (*eval)(double s_last, double s_max);
    };
    static const GEntry kBattery[] = {
        {"last", [](double s, double) { return s; }},
        {"max", [](double, double m) { return m; }},
        {"tanh(last)", [](double s, double) { return std::tanh(s); }},
    };

    ProbeReport report;
    report.min_value = std::numeric_limits<double>::infinity();
    std::vector<double> term(reps.reps);
    for (const auto& g : kBattery) {
        for (std::size_t j = 1; j < n; ++j) {
            for (std::size_t i = 0; i < reps.reps; ++i) {
                const auto& v = reps.paths[i].values;
                double s = 0.0, smax = -std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < j; ++k) {
                    s += v[k];
                    smax = std::max(smax, s);
                }
                term[i] = v[j] * g.eval(s, smax);
            }
            const double m = mean_of(term);
            std::vector<double> sq(reps.reps);
            for (std::size_t i = 0; i < reps.reps; ++i) {
                const double d = term[i] - m;
                sq[i] = d * d;
            }
            const double se =
                std::sqrt(pairwise_sum(sq) / static_cast<double>(reps.reps - 1) /
                          static_cast<double>(reps.reps));
            ProbeValue pv{g.name + " @ j=" + std::to_string(j), m, se};
            if (m < report.min_value) {
                report.min_value = m;
                report.min_stderr = se;
            }
            if (m < -3.0 * se) report.violation = true;
            report.values.push_back(std::move(pv));
        }
    }
    return report;
}

}  // namespace assoclt
