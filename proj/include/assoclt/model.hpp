#pragma once

// Shared domain types: generative family specifications, sample paths,
// the n = m*l + r blocking decomposition, and the experiment config schema.
//
// Everything here is immutable after construction and safe to share across
// worker threads.

#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "assoclt/math.hpp"

namespace assoclt {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Base (marginal / innovation) distributions
// ---------------------------------------------------------------------------

enum class DistName { normal, exponential, uniform, rademacher };

struct BaseDist {
    DistName name = DistName::normal;
    double rate = 1.0;        // exponential
    double half_width = 1.0;  // uniform

    double variance() const {
        switch (name) {
            case DistName::normal: return 1.0;
            case DistName::exponential: return 1.0 / (rate * rate);
            case DistName::uniform: return half_width * half_width / 3.0;
            case DistName::rademacher: return 1.0;
        }
        return 0.0;
    }

    // E|X|^3 for the centered variable. Exponential: 1/rate^3 * (12/e - 2).
    double abs_third_moment() const {
        switch (name) {
            case DistName::normal: return gaussian_abs_moment(3.0);
            case DistName::exponential:
                return (12.0 * std::exp(-1.0) - 2.0) / (rate * rate * rate);
            case DistName::uniform:
                return half_width * half_width * half_width / 4.0;
            case DistName::rademacher: return 1.0;
        }
        return 0.0;
    }

    bool symmetric() const { return name != DistName::exponential; }
    bool gaussian() const { return name == DistName::normal; }
};

inline std::string to_string(DistName d) {
    switch (d) {
        case DistName::normal: return "normal";
        case DistName::exponential: return "exponential";
        case DistName::uniform: return "uniform";
        case DistName::rademacher: return "rademacher";
    }
    return "?";
}

inline DistName dist_name_from_string(const std::string& s) {
    if (s == "normal") return DistName::normal;
    if (s == "exponential") return DistName::exponential;
    if (s == "uniform") return DistName::uniform;
    if (s == "rademacher") return DistName::rademacher;
    throw std::invalid_argument("unknown distribution id: " + s);
}

// ---------------------------------------------------------------------------
// Autocovariance rules for the Gaussian family
// ---------------------------------------------------------------------------

enum class AutocovRule { geometric, table };

struct Autocovariance {
    AutocovRule rule = AutocovRule::geometric;
    double var = 1.0;  // gamma(0) for the geometric rule
    double rho = 0.5;
    std::vector<double> values;  // gamma(0..q-1) for the table rule

    double at(std::size_t k) const {
        if (rule == AutocovRule::geometric) return var * std::pow(rho, static_cast<double>(k));
        return k < values.size() ? values[k] : 0.0;
    }

    bool finite_support() const { return rule == AutocovRule::table || rho == 0.0; }

    // Number of lags (including lag 0) with nonzero covariance; table rule only.
    std::size_t support() const {
        if (rule == AutocovRule::geometric) return rho == 0.0 ? 1 : 0;
        return values.size();
    }
};

// ---------------------------------------------------------------------------
// Registered nondecreasing scalar maps
// ---------------------------------------------------------------------------

enum class MapName { affine, tanh_scaled, piecewise_linear };

struct MonotoneMap {
    MapName name = MapName::affine;
    double slope = 1.0;      // affine
    double intercept = 0.0;  // affine
    double scale = 1.0;      // tanh_scaled: x -> tanh(scale * x)
    std::vector<double> knots_x, knots_y;  // piecewise_linear, extended linearly

    static MonotoneMap identity() { return MonotoneMap{}; }

    double operator()(double x) const {
        switch (name) {
            case MapName::affine: return slope * x + intercept;
            case MapName::tanh_scaled: return std::tanh(scale * x);
            case MapName::piecewise_linear: return eval_pwl(x);
        }
        return x;
    }

    // A true upper bound on the derivative (exact for these map classes).
    double derivative_bound() const {
        switch (name) {
            case MapName::affine: return slope;
            case MapName::tanh_scaled: return scale;
            case MapName::piecewise_linear: {
                double b = 0.0;
                for (std::size_t i = 1; i < knots_x.size(); ++i) {
                    const double dx = knots_x[i] - knots_x[i - 1];
                    if (dx > 0.0) b = std::max(b, (knots_y[i] - knots_y[i - 1]) / dx);
                }
                return b;
            }
        }
        return 0.0;
    }

    bool is_identity() const {
        return name == MapName::affine && slope == 1.0 && intercept == 0.0;
    }

    // Odd maps preserve the mean-zero property of symmetric marginals.
    bool odd() const {
        if (name == MapName::tanh_scaled) return true;
        return name == MapName::affine && intercept == 0.0;
    }

  private:
    double eval_pwl(double x) const {
        const std::size_t k = knots_x.size();
        if (k == 0) return x;
        if (x <= knots_x.front()) {
            const double s = k > 1 ? (knots_y[1] - knots_y[0]) / (knots_x[1] - knots_x[0]) : 0.0;
            return knots_y.front() + s * (x - knots_x.front());
        }
        if (x >= knots_x.back()) {
            const double s = k > 1 ? (knots_y[k - 1] - knots_y[k - 2]) / (knots_x[k - 1] - knots_x[k - 2]) : 0.0;
            return knots_y.back() + s * (x - knots_x.back());
        }
        std::size_t i = 1;
        while (knots_x[i] < x) ++i;
        const double t = (x - knots_x[i - 1]) / (knots_x[i] - knots_x[i - 1]);
        return knots_y[i - 1] + t * (knots_y[i] - knots_y[i - 1]);
    }
};

inline std::string to_string(MapName m) {
    switch (m) {
        case MapName::affine: return "affine";
        case MapName::tanh_scaled: return "tanh";
        case MapName::piecewise_linear: return "pwl";
    }
    return "?";
}

inline MapName map_name_from_string(const std::string& s) {
    if (s == "affine" || s == "identity") return MapName::affine;
    if (s == "tanh") return MapName::tanh_scaled;
    if (s == "pwl") return MapName::piecewise_linear;
    throw std::invalid_argument("unregistered map id: " + s);
}

// ---------------------------------------------------------------------------
// FamilySpec
// ---------------------------------------------------------------------------

enum class FamilyKind {
    iid,
    gaussian_cov,
    monotone_transform,
    moving_average,
    common_factor,
    markov_two_state,
};

inline std::string to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::iid: return "iid";
        case FamilyKind::gaussian_cov: return "gaussian_cov";
        case FamilyKind::monotone_transform: return "monotone_transform";
        case FamilyKind::moving_average: return "moving_average";
        case FamilyKind::common_factor: return "common_factor";
        case FamilyKind::markov_two_state: return "markov_two_state";
    }
    return "?";
}

inline FamilyKind family_kind_from_string(const std::string& s) {
    if (s == "iid") return FamilyKind::iid;
    if (s == "gaussian_cov") return FamilyKind::gaussian_cov;
    if (s == "monotone_transform") return FamilyKind::monotone_transform;
    if (s == "moving_average") return FamilyKind::moving_average;
    if (s == "common_factor") return FamilyKind::common_factor;
    if (s == "markov_two_state") return FamilyKind::markov_two_state;
    throw std::invalid_argument("unknown family kind: " + s);
}

// Declarative description of a generative family of associated sequences.
// Only the fields relevant to `kind` are meaningful.
struct FamilySpec {
    FamilyKind kind = FamilyKind::iid;
    bool centered = true;

    BaseDist dist;            // iid, common_factor, moving_average innovations
    Autocovariance autocov;   // gaussian_cov
    std::vector<double> weights;  // moving_average
    double p_stay0 = 0.5, p_stay1 = 0.5;  // markov_two_state
    std::shared_ptr<const FamilySpec> base;  // monotone_transform
    MonotoneMap map;          // monotone_transform
    bool recenter = true;     // monotone_transform

    // Convenience constructors for the families used throughout the suite.
    static FamilySpec iid(BaseDist d = {}) {
        FamilySpec f;
        f.kind = FamilyKind::iid;
        f.dist = d;
        return f;
    }
    static FamilySpec iid_normal() { return iid(); }
    static FamilySpec geometric_gaussian(double rho, double var = 1.0) {
        FamilySpec f;
        f.kind = FamilyKind::gaussian_cov;
        f.autocov = {AutocovRule::geometric, var, rho, {}};
        return f;
    }
    static FamilySpec gaussian_table(std::vector<double> gamma) {
        FamilySpec f;
        f.kind = FamilyKind::gaussian_cov;
        f.autocov.rule = AutocovRule::table;
        f.autocov.values = std::move(gamma);
        return f;
    }
    static FamilySpec moving_average(std::vector<double> w, BaseDist innovation = {}) {
        FamilySpec f;
        f.kind = FamilyKind::moving_average;
        f.weights = std::move(w);
        f.dist = innovation;
        return f;
    }
    static FamilySpec common_factor(BaseDist d = {}) {
        FamilySpec f;
        f.kind = FamilyKind::common_factor;
        f.dist = d;
        return f;
    }
    static FamilySpec markov(double p_stay0, double p_stay1, bool centered = true) {
        FamilySpec f;
        f.kind = FamilyKind::markov_two_state;
        f.p_stay0 = p_stay0;
        f.p_stay1 = p_stay1;
        f.centered = centered;
        return f;
    }
    static FamilySpec monotone(FamilySpec base_spec, MonotoneMap m, bool recenter = true) {
        FamilySpec f;
        f.kind = FamilyKind::monotone_transform;
        f.base = std::make_shared<const FamilySpec>(std::move(base_spec));
        f.map = m;
        f.recenter = recenter;
        f.centered = recenter;
        return f;
    }
};

// ---------------------------------------------------------------------------
// Family validation: violations are data, not failures
// ---------------------------------------------------------------------------

struct ConstraintViolation {
    std::string constraint;
    std::string detail;
};

inline std::vector<ConstraintViolation> validate_family(const FamilySpec& spec) {
    std::vector<ConstraintViolation> out;
    auto flag = [&out](std::string c, std::string d) {
        out.push_back({std::move(c), std::move(d)});
    };

    auto check_dist = [&](const BaseDist& d, const char* where) {
        if (d.name == DistName::exponential && !(d.rate > 0.0))
            flag("positive-rate", std::string(where) + ": exponential rate must be > 0");
        if (d.name == DistName::uniform && !(d.half_width > 0.0))
            flag("positive-half-width", std::string(where) + ": uniform half_width must be > 0");
    };

    switch (spec.kind) {
        case FamilyKind::iid:
            check_dist(spec.dist, "dist");
            break;
        case FamilyKind::gaussian_cov: {
            const auto& ac = spec.autocov;
            if (ac.rule == AutocovRule::geometric) {
                if (!(ac.var > 0.0)) flag("positive-variance", "autocov var must be > 0");
                if (ac.rho < 0.0)
                    flag("nonnegative-correlation",
                         "gamma(1) = " + std::to_string(ac.var * ac.rho) + " < 0");
                if (ac.rho >= 1.0) flag("summable-covariance", "rho must be < 1");
            } else {
                if (ac.values.empty() || !(ac.values[0] > 0.0))
                    flag("positive-variance", "gamma(0) must be > 0");
                for (std::size_t k = 0; k < ac.values.size(); ++k)
                    if (ac.values[k] < 0.0)
                        flag("nonnegative-correlation",
                             "gamma(" + std::to_string(k) + ") = " + std::to_string(ac.values[k]) + " < 0");
            }
            break;
        }
        case FamilyKind::moving_average: {
            if (spec.weights.empty()) flag("nonempty-weights", "weight vector is empty");
            bool any_positive = false;
            for (std::size_t k = 0; k < spec.weights.size(); ++k) {
                if (spec.weights[k] < 0.0)
                    flag("nonnegative-weights",
                         "w[" + std::to_string(k) + "] = " + std::to_string(spec.weights[k]) + " < 0");
                if (spec.weights[k] > 0.0) any_positive = true;
            }
            if (!spec.weights.empty() && !any_positive)
                flag("some-positive-weight", "all weights are zero");
            check_dist(spec.dist, "innovation");
            break;
        }
        case FamilyKind::common_factor:
            check_dist(spec.dist, "dist");
            break;
        case FamilyKind::markov_two_state: {
            if (spec.p_stay0 < 0.0 || spec.p_stay0 > 1.0)
                flag("probability-range", "p_stay0 not in [0,1]");
            if (spec.p_stay1 < 0.0 || spec.p_stay1 > 1.0)
                flag("probability-range", "p_stay1 not in [0,1]");
            // Stochastic monotonicity: P(next=1|cur=1) >= P(next=1|cur=0).
            if (spec.p_stay1 < 1.0 - spec.p_stay0)
                flag("stochastic-monotonicity",
                     "p_stay1 = " + std::to_string(spec.p_stay1) + " < 1 - p_stay0 = " +
                         std::to_string(1.0 - spec.p_stay0));
            if (spec.p_stay0 >= 1.0 && spec.p_stay1 >= 1.0)
                flag("irreducible-chain", "both states absorbing; stationary law undefined");
            break;
        }
        case FamilyKind::monotone_transform: {
            if (!spec.base) {
                flag("base-present", "monotone_transform requires a base family");
                break;
            }
            auto inner = validate_family(*spec.base);
            for (auto& v : inner) out.push_back({"base: " + v.constraint, v.detail});
            const auto& m = spec.map;
            if (m.name == MapName::affine && !(m.slope > 0.0))
                flag("positive-slope", "affine slope must be > 0");
            if (m.name == MapName::tanh_scaled && !(m.scale > 0.0))
                flag("positive-scale", "tanh scale must be > 0");
            if (m.name == MapName::piecewise_linear) {
                if (m.knots_x.size() != m.knots_y.size() || m.knots_x.size() < 2)
                    flag("pwl-knots", "need >= 2 aligned knot pairs");
                for (std::size_t i = 1; i < m.knots_x.size(); ++i) {
                    if (!(m.knots_x[i] > m.knots_x[i - 1]))
                        flag("pwl-knots", "knots_x must be strictly increasing");
                    if (i < m.knots_y.size() && m.knots_y[i] < m.knots_y[i - 1])
                        flag("nondecreasing-map", "knots_y must be nondecreasing");
                }
            }
            break;
        }
    }
    return out;
}

inline void require_valid(const FamilySpec& spec) {
    auto v = validate_family(spec);
    if (!v.empty()) {
        std::string msg = "family constraint violated: ";
        for (const auto& c : v) msg += c.constraint + " (" + c.detail + "); ";
        throw std::invalid_argument(msg);
    }
}

// ---------------------------------------------------------------------------
// Sample paths and seeded replicate collections
// ---------------------------------------------------------------------------

struct SamplePath {
    std::size_t n = 0;
    std::vector<double> values;
    FamilySpec family;
    std::uint64_t seed = 0;    // master seed the stream was keyed with
    std::uint64_t stream = 0;  // stream id within that seed
};

struct ReplicateSet {
    std::size_t reps = 0;
    std::vector<SamplePath> paths;
    std::uint64_t master_seed = 0;

    std::size_t n() const { return paths.empty() ? 0 : paths.front().n; }
};

// ---------------------------------------------------------------------------
// Blocking
// ---------------------------------------------------------------------------

// n = m*l + r with 0 <= r < l, l >= 1, m >= 1.
struct BlockScheme {
    std::size_t n = 0;
    std::size_t ell = 1;
    std::size_t m = 1;
    std::size_t r = 0;
};

enum class BlockRuleKind { power, fixed, table };

struct BlockRule {
    BlockRuleKind kind = BlockRuleKind::power;
    double alpha = 0.5;       // power: l(n) = max(1, floor(n^alpha))
    std::size_t ell0 = 1;     // fixed
    std::vector<std::pair<std::size_t, std::size_t>> table;  // explicit n -> l

    static BlockRule power_rule(double a) { return {BlockRuleKind::power, a, 1, {}}; }
    static BlockRule fixed_rule(std::size_t l0) { return {BlockRuleKind::fixed, 0.5, l0, {}}; }
    static BlockRule sqrt_rule() { return power_rule(0.5); }

    std::size_t ell(std::size_t n) const {
        switch (kind) {
            case BlockRuleKind::power: {
                if (!(alpha > 0.0 && alpha < 1.0))
                    throw std::invalid_argument("block rule: alpha must be in (0,1)");
                double raw = alpha == 0.5 ? std::sqrt(static_cast<double>(n))
                                          : std::pow(static_cast<double>(n), alpha);
                // Nudge rescues exact powers from one-ulp-low pow() results.
                auto l = static_cast<std::size_t>(std::floor(raw + 1e-9));
                return l < 1 ? 1 : l;
            }
            case BlockRuleKind::fixed:
                if (ell0 < 1) throw std::invalid_argument("block rule: fixed l must be >= 1");
                return ell0;
            case BlockRuleKind::table:
                for (const auto& [nn, ll] : table)
                    if (nn == n) return ll;
                throw std::invalid_argument("block rule table has no entry for n = " +
                                            std::to_string(n));
        }
        return 1;
    }
};

inline BlockScheme make_block_scheme(std::size_t n, const BlockRule& rule) {
    if (n < 1) throw std::invalid_argument("make_block_scheme: n must be >= 1");
    const std::size_t ell = rule.ell(n);
    if (ell < 1) throw std::invalid_argument("make_block_scheme: l must be >= 1");
    const std::size_t m = n / ell;
    if (m < 1)
        throw std::invalid_argument("make_block_scheme: invalid scheme, floor(n/l) = 0 at n = " +
                                    std::to_string(n) + ", l = " + std::to_string(ell));
    return BlockScheme{n, ell, m, n - m * ell};
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct Tolerances {
    double limit_tol = 0.05;     // finite-n verdict band around the limit target
    double analytic_tol = 1e-10; // jitter / remainder budget for exact computations
    double ks_alpha = 0.05;      // level of the normality test
};

struct ExperimentConfig {
    FamilySpec family;
    BlockRule block_rule = BlockRule::sqrt_rule();
    std::vector<std::size_t> n_grid;
    std::size_t reps = 1000;
    double delta = 1.0;    // moment exponent in the Lyapounov-type condition
    double epsilon = 0.1;  // truncation level in the Lindeberg-type conditions
    std::uint64_t seed = 0;
    bool hc_literal = false;  // force the l^{3/2} prefactor regardless of delta
    Tolerances tolerances;

    void validate() const {
        if (n_grid.empty()) throw std::invalid_argument("config: n_grid is empty");
        for (std::size_t i = 1; i < n_grid.size(); ++i)
            if (n_grid[i] <= n_grid[i - 1])
                throw std::invalid_argument("config: n_grid must be strictly increasing at index " +
                                            std::to_string(i));
        if (reps < 1) throw std::invalid_argument("config: reps must be >= 1");
        if (!(delta > 0.0)) throw std::invalid_argument("config: delta must be > 0");
        if (!(epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be > 0");
        if (!(tolerances.limit_tol > 0.0)) throw std::invalid_argument("config: limit_tol must be > 0");
        if (!(tolerances.analytic_tol > 0.0)) throw std::invalid_argument("config: analytic_tol must be > 0");
        if (!(tolerances.ks_alpha > 0.0 && tolerances.ks_alpha < 1.0))
            throw std::invalid_argument("config: ks_alpha must be in (0,1)");
        require_valid(family);
        // Reject rather than silently adjust schemes with m = 0.
        for (std::size_t n : n_grid) (void)make_block_scheme(n, block_rule);
    }
};

// ---------------------------------------------------------------------------
// JSON serialization (tagged-union family form; lossless round-trip)
// ---------------------------------------------------------------------------

inline json to_json(const BaseDist& d) {
    json j;
    j["name"] = to_string(d.name);
    if (d.name == DistName::exponential) j["rate"] = d.rate;
    if (d.name == DistName::uniform) j["half_width"] = d.half_width;
    return j;
}

inline BaseDist base_dist_from_json(const json& j) {
    BaseDist d;
    d.name = dist_name_from_string(j.at("name").get<std::string>());
    if (d.name == DistName::exponential) d.rate = j.value("rate", 1.0);
    if (d.name == DistName::uniform) d.half_width = j.value("half_width", 1.0);
    return d;
}

inline json to_json(const MonotoneMap& m) {
    json j;
    j["name"] = to_string(m.name);
    switch (m.name) {
        case MapName::affine:
            j["slope"] = m.slope;
            j["intercept"] = m.intercept;
            break;
        case MapName::tanh_scaled:
            j["scale"] = m.scale;
            break;
        case MapName::piecewise_linear:
            j["knots_x"] = m.knots_x;
            j["knots_y"] = m.knots_y;
            break;
    }
    return j;
}

inline MonotoneMap monotone_map_from_json(const json& j) {
    MonotoneMap m;
    m.name = map_name_from_string(j.at("name").get<std::string>());
    switch (m.name) {
        case MapName::affine:
            m.slope = j.value("slope", 1.0);
            m.intercept = j.value("intercept", 0.0);
            break;
        case MapName::tanh_scaled:
            m.scale = j.value("scale", 1.0);
            break;
        case MapName::piecewise_linear:
            m.knots_x = j.at("knots_x").get<std::vector<double>>();
            m.knots_y = j.at("knots_y").get<std::vector<double>>();
            break;
    }
    return m;
}

inline json to_json(const FamilySpec& f) {
    json j;
    j["kind"] = to_string(f.kind);
    switch (f.kind) {
        case FamilyKind::iid:
        case FamilyKind::common_factor:
            j["dist"] = to_json(f.dist);
            break;
        case FamilyKind::gaussian_cov:
            if (f.autocov.rule == AutocovRule::geometric) {
                j["autocov"] = {{"rule", "geometric"}, {"var", f.autocov.var}, {"rho", f.autocov.rho}};
            } else {
                j["autocov"] = {{"rule", "table"}, {"values", f.autocov.values}};
            }
            break;
        case FamilyKind::moving_average:
            j["weights"] = f.weights;
            j["innovation"] = to_json(f.dist);
            break;
        case FamilyKind::markov_two_state:
            j["p_stay0"] = f.p_stay0;
            j["p_stay1"] = f.p_stay1;
            break;
        case FamilyKind::monotone_transform:
            j["base"] = f.base ? to_json(*f.base) : json(nullptr);
            j["map"] = to_json(f.map);
            j["recenter"] = f.recenter;
            break;
    }
    j["centered"] = f.centered;
    return j;
}

inline FamilySpec family_from_json(const json& j) {
    FamilySpec f;
    f.kind = family_kind_from_string(j.at("kind").get<std::string>());
    switch (f.kind) {
        case FamilyKind::iid:
        case FamilyKind::common_factor:
            f.dist = base_dist_from_json(j.at("dist"));
            break;
        case FamilyKind::gaussian_cov: {
            const json& ac = j.at("autocov");
            const std::string rule = ac.at("rule").get<std::string>();
            if (rule == "geometric") {
                f.autocov = {AutocovRule::geometric, ac.at("var").get<double>(),
                             ac.at("rho").get<double>(), {}};
            } else if (rule == "table") {
                f.autocov.rule = AutocovRule::table;
                f.autocov.values = ac.at("values").get<std::vector<double>>();
            } else {
                throw std::invalid_argument("unknown autocov rule: " + rule);
            }
            break;
        }
        case FamilyKind::moving_average:
            f.weights = j.at("weights").get<std::vector<double>>();
            f.dist = base_dist_from_json(j.at("innovation"));
            break;
        case FamilyKind::markov_two_state:
            f.p_stay0 = j.at("p_stay0").get<double>();
            f.p_stay1 = j.at("p_stay1").get<double>();
            break;
        case FamilyKind::monotone_transform:
            f.base = std::make_shared<const FamilySpec>(family_from_json(j.at("base")));
            f.map = monotone_map_from_json(j.at("map"));
            f.recenter = j.value("recenter", true);
            break;
    }
    f.centered = j.value("centered", true);
    return f;
}

inline json to_json(const BlockRule& r) {
    json j;
    switch (r.kind) {
        case BlockRuleKind::power:
            j["rule"] = "power";
            j["alpha"] = r.alpha;
            break;
        case BlockRuleKind::fixed:
            j["rule"] = "fixed";
            j["ell"] = r.ell0;
            break;
        case BlockRuleKind::table: {
            j["rule"] = "table";
            json rows = json::array();
            for (const auto& [n, l] : r.table) rows.push_back({{"n", n}, {"ell", l}});
            j["entries"] = rows;
            break;
        }
    }
    return j;
}

inline BlockRule block_rule_from_json(const json& j) {
    BlockRule r;
    const std::string rule = j.at("rule").get<std::string>();
    if (rule == "power") {
        r.kind = BlockRuleKind::power;
        r.alpha = j.at("alpha").get<double>();
    } else if (rule == "fixed") {
        r.kind = BlockRuleKind::fixed;
        r.ell0 = j.at("ell").get<std::size_t>();
    } else if (rule == "table") {
        r.kind = BlockRuleKind::table;
        for (const auto& row : j.at("entries"))
            r.table.emplace_back(row.at("n").get<std::size_t>(), row.at("ell").get<std::size_t>());
    } else {
        throw std::invalid_argument("unknown block rule: " + rule);
    }
    return r;
}

inline json to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = 1;
    j["family"] = to_json(c.family);
    j["block_rule"] = to_json(c.block_rule);
    j["n_grid"] = c.n_grid;
    j["reps"] = c.reps;
    j["delta"] = c.delta;
    j["epsilon"] = c.epsilon;
    j["seed"] = c.seed;
    j["hc_literal"] = c.hc_literal;
    j["tolerances"] = {{"limit_tol", c.tolerances.limit_tol},
                       {"analytic_tol", c.tolerances.analytic_tol},
                       {"ks_alpha", c.tolerances.ks_alpha}};
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.family = family_from_json(j.at("family"));
    c.block_rule = block_rule_from_json(j.at("block_rule"));
    c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
    c.reps = j.at("reps").get<std::size_t>();
    c.delta = j.value("delta", 1.0);
    c.epsilon = j.value("epsilon", 0.1);
    c.seed = j.value("seed", std::uint64_t{0});
    c.hc_literal = j.value("hc_literal", false);
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        c.tolerances.limit_tol = t.value("limit_tol", 0.05);
        c.tolerances.analytic_tol = t.value("analytic_tol", 1e-10);
        c.tolerances.ks_alpha = t.value("ks_alpha", 0.05);
    }
    return c;
}

// Stationary probability of state 1 for the two-state chain.
inline double markov_stationary_p1(const FamilySpec& f) {
    const double p01 = 1.0 - f.p_stay0;
    const double p10 = 1.0 - f.p_stay1;
    if (p01 + p10 == 0.0)
        throw std::invalid_argument("markov_two_state: both states absorbing");
    return p01 / (p01 + p10);
}

inline std::uint64_t family_hash(const FamilySpec& f) { return fnv1a64(to_json(f).dump()); }
inline std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a64(to_json(c).dump()); }

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

}  // namespace assoclt
