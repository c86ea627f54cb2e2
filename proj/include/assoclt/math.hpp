#pragma once

// Small numeric helpers shared across the toolkit: deterministic pairwise
// reductions, standard-normal functions, Gaussian moment closed forms and
// the asymptotic Kolmogorov critical value.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace assoclt {

inline constexpr double kPi = std::numbers::pi;

// Pairwise (cascade) summation. Fixed reduction order: the result depends
// only on the element order, never on thread count or chunking, which keeps
// replicate-level reductions bit-stable.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n <= 8) {
        double acc = 0.0;
        for (double x : xs) acc += x;
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double mean_of(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean_of: empty input");
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double sample_variance(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("sample_variance: need >= 2 values");
    const double m = mean_of(xs);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = xs[i] - m;
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(n - 1);
}

// Standard normal density and distribution function.
inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Inverse standard normal distribution function. Acklam's rational
// approximation polished by two Newton steps; good to ~1e-15 over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must be in (0,1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};

    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        const double err = normal_cdf(x) - p;
        x -= err / normal_pdf(x);
    }
    return x;
}

// E|N(0,1)|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi), p > 0.
inline double gaussian_abs_moment(double p) {
    if (p <= 0.0) throw std::domain_error("gaussian_abs_moment: p must be > 0");
    return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) / std::sqrt(kPi);
}

// E[B^2 1{|B| >= a}] for B ~ N(0, tau2), a >= 0.
inline double gaussian_trunc_second_moment(double tau2, double a) {
    if (tau2 < 0.0) throw std::domain_error("gaussian_trunc_second_moment: tau2 < 0");
    if (tau2 == 0.0) return 0.0;
    if (a <= 0.0) return tau2;
    const double c = a / std::sqrt(tau2);
    const double tail = 0.5 * std::erfc(c / std::numbers::sqrt2);
    return tau2 * 2.0 * (tail + c * normal_pdf(c));
}

// Asymptotic one-sample Kolmogorov critical value: c(alpha)/sqrt(R) with
// c(alpha) = sqrt(-ln(alpha/2)/2). At alpha = 0.05, c = 1.3581.
inline double ks_critical_value(double alpha, std::size_t n_samples) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("ks_critical_value: alpha must be in (0,1)");
    if (n_samples == 0) throw std::invalid_argument("ks_critical_value: no samples");
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) /
           std::sqrt(static_cast<double>(n_samples));
}

// FNV-1a, used for provenance hashes of configs and family specs.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace assoclt
