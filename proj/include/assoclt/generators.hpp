#pragma once

// Seeded, reproducible sample paths for each associated family plus the
// common-factor counterexample. Every generator is a pure function of
// (spec, n, seed): replicate fan-out uses one counter-based stream per
// replicate, so serial and parallel runs are bit-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "assoclt/math.hpp"
#include "assoclt/model.hpp"
#include "assoclt/rng.hpp"

namespace assoclt {

// ---------------------------------------------------------------------------
// Deterministic replicate fan-out
// ---------------------------------------------------------------------------

// Runs fn(i) for i in [0, count) over `threads` workers with static chunking.
// Work items must write to disjoint slots; the first worker exception is
// rethrown on the caller thread.
inline void parallel_for_indices(std::size_t count, unsigned threads,
                                 const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Marginal draws and symmetry (used for transform recentering)
// ---------------------------------------------------------------------------

inline double draw_base_dist(const BaseDist& d, RngStream& rng) {
    switch (d.name) {
        case DistName::normal: return rng.normal();
        case DistName::exponential: return rng.centered_exponential(d.rate);
        case DistName::uniform: return rng.centered_uniform(d.half_width);
        case DistName::rademacher: return rng.rademacher();
    }
    throw std::invalid_argument("unknown distribution id");
}

inline bool marginal_symmetric(const FamilySpec& f) {
    switch (f.kind) {
        case FamilyKind::iid:
        case FamilyKind::common_factor: return f.dist.symmetric();
        case FamilyKind::gaussian_cov: return true;
        case FamilyKind::moving_average: return f.dist.symmetric();
        case FamilyKind::markov_two_state:
            return f.centered && std::abs(markov_stationary_p1(f) - 0.5) < 1e-15;
        case FamilyKind::monotone_transform:
            return f.base && marginal_symmetric(*f.base) && f.map.odd();
    }
    return false;
}

// One draw from the stationary marginal law of the family.
inline double draw_marginal(const FamilySpec& f, RngStream& rng) {
    switch (f.kind) {
        case FamilyKind::iid:
        case FamilyKind::common_factor: return draw_base_dist(f.dist, rng);
        case FamilyKind::gaussian_cov: return std::sqrt(f.autocov.at(0)) * rng.normal();
        case FamilyKind::moving_average: {
            double x = 0.0;
            for (double w : f.weights) x += w * draw_base_dist(f.dist, rng);
            return x;
        }
        case FamilyKind::markov_two_state: {
            const double p1 = markov_stationary_p1(f);
            const double state = rng.uniform() <= p1 ? 1.0 : 0.0;
            return f.centered ? state - p1 : state;
        }
        case FamilyKind::monotone_transform: {
            if (!f.base) throw std::invalid_argument("monotone_transform without base");
            return f.map(draw_marginal(*f.base, rng));  // recentering handled by caller
        }
    }
    throw std::invalid_argument("unknown family kind");
}

// Mean of f.map over the base marginal; analytic where the structure gives
// it away, Monte Carlo on a dedicated derived stream otherwise.
inline double transform_marginal_mean(const FamilySpec& f) {
    if (!f.base) throw std::invalid_argument("monotone_transform without base");
    const MonotoneMap& m = f.map;
    if (m.name == MapName::affine) return m.intercept;  // base marginals are mean zero
    if (m.odd() && marginal_symmetric(*f.base)) return 0.0;
    if (f.base->kind == FamilyKind::markov_two_state && f.base->centered) {
        const double p1 = markov_stationary_p1(*f.base);
        return p1 * m(1.0 - p1) + (1.0 - p1) * m(-p1);
    }
    // Monte Carlo fallback, keyed off the family hash so it is a pure
    // function of the spec.
    constexpr std::size_t kRecenterDraws = 200000;
    RngStream rng(family_hash(*f.base), 0x7265636e74657261ULL);
    double acc = 0.0;
    for (std::size_t i = 0; i < kRecenterDraws; ++i) acc += m(draw_marginal(*f.base, rng));
    return acc / static_cast<double>(kRecenterDraws);
}

// ---------------------------------------------------------------------------
// Prepared per-family path generator
// ---------------------------------------------------------------------------

namespace detail {

// Lower Cholesky factor of the symmetric Toeplitz matrix with first column
// gamma(0..), restricted to a band of width `band`. Row-major rows of length
// band+1; entry (i, j) with i-j <= band lives at row i, offset j-i+band.
struct BandedCholesky {
    std::size_t n = 0;
    std::size_t band = 0;
    std::vector<double> rows;

    double at(std::size_t i, std::size_t j) const {
        return rows[i * (band + 1) + (j + band - i)];
    }
    double& at(std::size_t i, std::size_t j) {
        return rows[i * (band + 1) + (j + band - i)];
    }
};

inline BandedCholesky banded_cholesky(const Autocovariance& ac, std::size_t n,
                                      std::size_t band, double jitter_tol) {
    if (n * (band + 1) > 100000000ULL)
        throw std::invalid_argument("gaussian_cov: banded factor would exceed the memory guard");
    BandedCholesky L;
    L.n = n;
    L.band = band;
    L.rows.assign(n * (band + 1), 0.0);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const double jitter = attempt == 0 ? 0.0 : jitter_tol;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const std::size_t j0 = i > band ? i - band : 0;
            for (std::size_t j = j0; j <= i; ++j) {
                double s = ac.at(i - j) + (i == j ? jitter : 0.0);
                const std::size_t k0 = std::max(j0, j > band ? j - band : std::size_t{0});
                for (std::size_t k = k0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
                if (i == j) {
                    if (s <= 0.0) {
                        ok = false;
                        break;
                    }
                    L.at(i, j) = std::sqrt(s);
                } else {
                    L.at(i, j) = s / L.at(j, j);
                }
            }
        }
        if (ok) return L;
        std::fill(L.rows.begin(), L.rows.end(), 0.0);
    }
    throw std::runtime_error(
        "gaussian_cov: covariance not positive semidefinite within jitter tolerance");
}

}  // namespace detail

// Holds whatever precomputation a family needs (triangular factors,
// recentering shifts) and fills path buffers from a caller-supplied stream.
class PathGenerator {
  public:
    PathGenerator(FamilySpec family, std::size_t n, double jitter_tol = 1e-10)
        : family_(std::move(family)), n_(n) {
        if (n_ < 1) throw std::invalid_argument("path length must be >= 1");
        require_valid(family_);
        switch (family_.kind) {
            case FamilyKind::gaussian_cov: prepare_gaussian(jitter_tol); break;
            case FamilyKind::monotone_transform:
                base_ = std::make_unique<PathGenerator>(*family_.base, n_, jitter_tol);
                shift_ = family_.recenter ? transform_marginal_mean(family_) : 0.0;
                break;
            default: break;
        }
    }

    const FamilySpec& family() const { return family_; }
    std::size_t n() const { return n_; }

    void fill(RngStream& rng, std::vector<double>& out) const {
        out.resize(n_);
        switch (family_.kind) {
            case FamilyKind::iid:
                for (auto& x : out) x = draw_base_dist(family_.dist, rng);
                break;
            case FamilyKind::gaussian_cov: fill_gaussian(rng, out); break;
            case FamilyKind::moving_average: fill_moving_average(rng, out); break;
            case FamilyKind::common_factor: {
                const double z = draw_base_dist(family_.dist, rng);
                std::fill(out.begin(), out.end(), z);
                break;
            }
            case FamilyKind::markov_two_state: fill_markov(rng, out); break;
            case FamilyKind::monotone_transform: {
                base_->fill(rng, out);
                for (auto& x : out) x = family_.map(x) - shift_;
                break;
            }
        }
    }

  private:
    void prepare_gaussian(double jitter_tol) {
        const Autocovariance& ac = family_.autocov;
        if (ac.rule == AutocovRule::geometric && ac.rho > 0.0) {
            // The AR(1) recursion is the closed-form triangular factorization
            // of the geometric Toeplitz covariance.
            ar1_sd0_ = std::sqrt(ac.var);
            ar1_innov_sd_ = std::sqrt(ac.var * (1.0 - ac.rho * ac.rho));
            return;
        }
        const std::size_t q = ac.rule == AutocovRule::table ? ac.values.size() : 1;
        const std::size_t band = std::min(n_ - 1, q > 0 ? q - 1 : 0);
        chol_ = std::make_unique<detail::BandedCholesky>(
            detail::banded_cholesky(ac, n_, band, jitter_tol));
    }

    void fill_gaussian(RngStream& rng, std::vector<double>& out) const {
        const Autocovariance& ac = family_.autocov;
        if (ac.rule == AutocovRule::geometric && ac.rho > 0.0) {
            out[0] = ar1_sd0_ * rng.normal();
            for (std::size_t i = 1; i < n_; ++i)
                out[i] = ac.rho * out[i - 1] + ar1_innov_sd_ * rng.normal();
            return;
        }
        std::vector<double> eps(n_);
        for (auto& e : eps) e = rng.normal();
        const auto& L = *chol_;
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i > L.band ? i - L.band : 0;
            double s = 0.0;
            for (std::size_t j = j0; j <= i; ++j) s += L.at(i, j) * eps[j];
            out[i] = s;
        }
    }

    void fill_moving_average(RngStream& rng, std::vector<double>& out) const {
        const std::size_t q = family_.weights.size();
        std::vector<double> eps(n_ + q - 1);
        for (auto& e : eps) e = draw_base_dist(family_.dist, rng);
        // eps[t + q - 1] plays the role of epsilon_t, t = 1..n.
        for (std::size_t t = 0; t < n_; ++t) {
            double x = 0.0;
            for (std::size_t k = 0; k < q; ++k) x += family_.weights[k] * eps[t + q - 1 - k];
            out[t] = x;
        }
    }

    void fill_markov(RngStream& rng, std::vector<double>& out) const {
        const double p1 = markov_stationary_p1(family_);
        const double shift = family_.centered ? p1 : 0.0;
        int state = rng.uniform() <= p1 ? 1 : 0;
        out[0] = static_cast<double>(state) - shift;
        for (std::size_t i = 1; i < n_; ++i) {
            const double stay = state == 1 ? family_.p_stay1 : family_.p_stay0;
            if (rng.uniform() > stay) state = 1 - state;
            out[i] = static_cast<double>(state) - shift;
        }
    }

    FamilySpec family_;
    std::size_t n_ = 0;
    double ar1_sd0_ = 0.0, ar1_innov_sd_ = 0.0;
    std::unique_ptr<detail::BandedCholesky> chol_;
    std::unique_ptr<PathGenerator> base_;
    double shift_ = 0.0;
};

// ---------------------------------------------------------------------------
// One-shot generation and replication
// ---------------------------------------------------------------------------

inline SamplePath generate_path(const FamilySpec& family, std::size_t n,
                                std::uint64_t seed, std::uint64_t stream_id = 0) {
    PathGenerator gen(family, n);
    RngStream rng(seed, stream_id);
    SamplePath path;
    path.n = n;
    path.family = family;
    path.seed = seed;
    path.stream = stream_id;
    gen.fill(rng, path.values);
    return path;
}

inline SamplePath gen_iid(const BaseDist& dist, std::size_t n, std::uint64_t seed) {
    return generate_path(FamilySpec::iid(dist), n, seed);
}

inline SamplePath gen_gaussian(const Autocovariance& autocov, std::size_t n,
                               std::uint64_t seed) {
    FamilySpec f;
    f.kind = FamilyKind::gaussian_cov;
    f.autocov = autocov;
    return generate_path(f, n, seed);
}

inline SamplePath gen_moving_average(std::vector<double> weights, const BaseDist& innovation,
                                     std::size_t n, std::uint64_t seed) {
    return generate_path(FamilySpec::moving_average(std::move(weights), innovation), n, seed);
}

inline SamplePath gen_common_factor(const BaseDist& dist, std::size_t n, std::uint64_t seed) {
    return generate_path(FamilySpec::common_factor(dist), n, seed);
}

inline SamplePath gen_markov_two_state(double p_stay0, double p_stay1, std::size_t n,
                                       std::uint64_t seed, bool centered = true) {
    return generate_path(FamilySpec::markov(p_stay0, p_stay1, centered), n, seed);
}

inline SamplePath gen_monotone_transform(const FamilySpec& base, const MonotoneMap& map,
                                         std::size_t n, std::uint64_t seed,
                                         bool recenter = true) {
    return generate_path(FamilySpec::monotone(base, map, recenter), n, seed);
}

// R independent paths; path i is keyed by stream id i under the master seed,
// so the result does not depend on execution order or thread count.
inline ReplicateSet replicate(const FamilySpec& family, std::size_t n, std::size_t reps,
                              std::uint64_t master_seed, unsigned threads = 0) {
    if (reps < 1) throw std::invalid_argument("replicate: reps must be >= 1");
    PathGenerator gen(family, n);
    ReplicateSet set;
    set.reps = reps;
    set.master_seed = master_seed;
    set.paths.resize(reps);
    parallel_for_indices(reps, threads, [&](std::size_t i) {
        RngStream rng(master_seed, i);
        SamplePath& p = set.paths[i];
        p.n = n;
        p.family = family;
        p.seed = master_seed;
        p.stream = i;
        gen.fill(rng, p.values);
    });
    return set;
}

// Correlated standard normal pairs (X, Y) with Corr = rho; used by the
// functional-inequality checks.
inline std::pair<std::vector<double>, std::vector<double>> sample_bivariate_normal(
    double rho, std::size_t count, std::uint64_t seed) {
    if (!(rho >= -1.0 && rho <= 1.0))
        throw std::invalid_argument("sample_bivariate_normal: |rho| must be <= 1");
    std::vector<double> xs(count), ys(count);
    RngStream rng(seed, 0);
    const double ortho = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < count; ++i) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        xs[i] = z1;
        ys[i] = rho * z1 + ortho * z2;
    }
    return {std::move(xs), std::move(ys)};
}

}  // namespace assoclt
