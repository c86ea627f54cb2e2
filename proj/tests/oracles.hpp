#pragma once

// Test-only oracles, independent of the library's computation paths:
// enumeration, quadrature and CDF scans used to derive expected values.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "assoclt/covariance.hpp"
#include "assoclt/math.hpp"

namespace oracles {

// Direct covariance of a finite discrete bivariate law: E[XY] - E[X]E[Y].
inline double direct_cov(const assoclt::DiscreteBivariate& d) {
    double exy = 0.0, ex = 0.0, ey = 0.0;
    for (const auto& a : d.atoms) {
        exy += a.p * a.x * a.y;
        ex += a.p * a.x;
        ey += a.p * a.y;
    }
    return exy - ex * ey;
}

// Exact MA autocovariance by enumerating Rademacher innovation sign
// patterns: E[X_1 X_{1+h}] over all 2^(n+q-1) outcomes.
inline std::vector<double> ma_gamma_by_enumeration(const std::vector<double>& weights,
                                                   std::size_t n) {
    const std::size_t q = weights.size();
    const std::size_t ne = n + q - 1;
    if (ne > 20) throw std::invalid_argument("enumeration oracle limited to 2^20 outcomes");
    std::vector<double> acc(n, 0.0);
    std::vector<double> eps(ne), x(n);
    for (unsigned long mask = 0; mask < (1ul << ne); ++mask) {
        for (std::size_t k = 0; k < ne; ++k) eps[k] = (mask >> k) & 1ul ? 1.0 : -1.0;
        for (std::size_t t = 0; t < n; ++t) {
            double s = 0.0;
            for (std::size_t k = 0; k < q; ++k) s += weights[k] * eps[t + q - 1 - k];
            x[t] = s;
        }
        for (std::size_t h = 0; h < n; ++h) acc[h] += x[0] * x[h];
    }
    for (auto& v : acc) v /= static_cast<double>(1ul << ne);
    return acc;
}

// Midpoint quadrature of f over [lo, hi].
inline double integrate(const std::function<double(double)>& f, double lo, double hi,
                        int cells = 200000) {
    const double h = (hi - lo) / cells;
    double acc = 0.0;
    for (int i = 0; i < cells; ++i) acc += f(lo + (i + 0.5) * h);
    return acc * h;
}

// Cov(f(X), g(Y)) for a standard bivariate normal with correlation rho, by
// 2-D midpoint quadrature (mean-zero f, g assumed odd or centered by caller).
inline double bivariate_normal_cov(const std::function<double(double)>& f,
                                   const std::function<double(double)>& g, double rho,
                                   int cells = 1200) {
    const double det = 1.0 - rho * rho;
    const double lo = -8.0, hi = 8.0;
    const double h = (hi - lo) / cells;
    double exy = 0.0, ex = 0.0, ey = 0.0;
    for (int i = 0; i < cells; ++i) {
        const double x = lo + (i + 0.5) * h;
        ex += f(x) * assoclt::normal_pdf(x);
        ey += g(x) * assoclt::normal_pdf(x);
        for (int j = 0; j < cells; ++j) {
            const double y = lo + (j + 0.5) * h;
            const double dens =
                std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)) /
                (2.0 * assoclt::kPi * std::sqrt(det));
            exy += f(x) * g(y) * dens;
        }
    }
    exy *= h * h;
    ex *= h;
    ey *= h;
    return exy - ex * ey;
}

// sup_x |F(x) - Phi(x)| by a fine scan; `cdf` must be right-continuous, the
// scan probes both sides of every grid point.
inline double cdf_sup_distance_to_normal(const std::function<double(double)>& cdf, double lo,
                                         double hi, int points = 2000000) {
    double best = 0.0;
    const double h = (hi - lo) / points;
    for (int i = 0; i <= points; ++i) {
        const double x = lo + i * h;
        best = std::max(best, std::abs(cdf(x) - assoclt::normal_cdf(x)));
    }
    return best;
}

// Dense Cholesky PSD check with jitter; true when the matrix factors after
// adding at most `jitter` to the diagonal.
inline bool psd_within_jitter(const std::vector<double>& sym, std::size_t n, double jitter) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<double> a = sym;
        if (attempt == 1)
            for (std::size_t i = 0; i < n; ++i) a[i * n + i] += jitter;
        bool ok = true;
        std::vector<double> L(n * n, 0.0);
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = a[i * n + j];
                for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
                if (i == j) {
                    if (s <= 0.0) {
                        ok = false;
                        break;
                    }
                    L[i * n + i] = std::sqrt(s);
                } else {
                    L[i * n + j] = s / L[j * n + j];
                }
            }
        }
        if (ok) return true;
    }
    return false;
}

}  // namespace oracles
