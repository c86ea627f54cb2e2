#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "assoclt/covariance.hpp"
#include "assoclt/generators.hpp"
#include "oracles.hpp"

using namespace assoclt;

namespace {

double lag1_corr_across_reps(const ReplicateSet& set) {
    std::vector<double> x0(set.reps), x1(set.reps);
    for (std::size_t i = 0; i < set.reps; ++i) {
        x0[i] = set.paths[i].values[0];
        x1[i] = set.paths[i].values[1];
    }
    const auto c = empirical_cov(x0, x1);
    return c.value / std::sqrt(sample_variance(x0) * sample_variance(x1));
}

}  // namespace

TEST_CASE("streams are deterministic and stream-separated") {
    RngStream a(7, 0), b(7, 0), c(7, 1);
    bool identical = true, distinct = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        identical = identical && va == b.next_u64();
        distinct = distinct || va != c.next_u64();
    }
    CHECK(identical);
    CHECK(distinct);
}

TEST_CASE("gen_iid determinism and support") {
    const auto p1 = gen_iid(BaseDist{}, 4, 7);
    const auto p2 = gen_iid(BaseDist{}, 4, 7);
    CHECK(p1.values == p2.values);

    const auto rad = gen_iid(BaseDist{DistName::rademacher}, 100000, 1);
    for (double v : rad.values) REQUIRE((v == 1.0 || v == -1.0));
}

TEST_CASE("gen_iid normal mean at Monte Carlo scale") {
    const auto p = gen_iid(BaseDist{}, 100000, 1);
    CHECK(std::abs(mean_of(p.values)) < 3.0 / std::sqrt(100000.0));  // 99% band
}

TEST_CASE("gen_iid rejects unknown distributions") {
    BaseDist d;
    d.name = static_cast<DistName>(99);
    CHECK_THROWS(gen_iid(d, 4, 1));
}

TEST_CASE("centered exponential and uniform have the advertised moments") {
    const auto e = gen_iid(BaseDist{DistName::exponential, 2.0}, 200000, 3);
    CHECK(std::abs(mean_of(e.values)) < 0.01);
    CHECK(sample_variance(e.values) == Catch::Approx(0.25).margin(0.01));

    const auto u = gen_iid(BaseDist{DistName::uniform, 1.0, 3.0}, 200000, 4);
    CHECK(std::abs(mean_of(u.values)) < 0.02);
    CHECK(sample_variance(u.values) == Catch::Approx(3.0).margin(0.05));
}

TEST_CASE("gen_gaussian with trivial autocovariance matches iid in law") {
    const auto set = replicate(FamilySpec::gaussian_table({1.0}), 2, 100000, 11);
    CHECK(std::abs(lag1_corr_across_reps(set)) < 0.01);
}

TEST_CASE("gen_gaussian geometric reproduces the requested correlation") {
    const auto set = replicate(FamilySpec::geometric_gaussian(0.5), 2, 200000, 12);
    CHECK(lag1_corr_across_reps(set) == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("gen_gaussian banded table route agrees with its autocovariance") {
    const auto set = replicate(FamilySpec::gaussian_table({1.0, 0.4, 0.1}), 3, 100000, 13);
    std::vector<double> x0(set.reps), x1(set.reps), x2(set.reps);
    for (std::size_t i = 0; i < set.reps; ++i) {
        x0[i] = set.paths[i].values[0];
        x1[i] = set.paths[i].values[1];
        x2[i] = set.paths[i].values[2];
    }
    CHECK(empirical_cov(x0, x1).value == Catch::Approx(0.4).margin(0.015));
    CHECK(empirical_cov(x0, x2).value == Catch::Approx(0.1).margin(0.015));
    CHECK(sample_variance(x1) == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("gen_gaussian rejects negative autocovariance") {
    CHECK_THROWS_AS(gen_gaussian(Autocovariance{AutocovRule::table, 1.0, 0.0, {1.0, -0.2}}, 8, 1),
                    std::invalid_argument);
}

TEST_CASE("gen_gaussian rejects non-PSD tables beyond jitter") {
    // gamma(1) > gamma(0) cannot be a covariance.
    CHECK_THROWS_AS(gen_gaussian(Autocovariance{AutocovRule::table, 1.0, 0.0, {1.0, 2.0}}, 16, 1),
                    std::runtime_error);
}

TEST_CASE("moving average autocovariance matches the enumeration oracle") {
    const auto enumer = oracles::ma_gamma_by_enumeration({1.0, 1.0}, 3);
    const auto analytic =
        stationary_gamma(FamilySpec::moving_average({1.0, 1.0}, BaseDist{DistName::rademacher}), 3);
    for (std::size_t h = 0; h < 3; ++h)
        CHECK(analytic[h] == Catch::Approx(enumer[h]).margin(1e-12));
    CHECK(analytic[0] == 2.0);
    CHECK(analytic[1] == 1.0);
    CHECK(analytic[2] == 0.0);
}

TEST_CASE("moving average with a single weight matches iid in law") {
    const auto p = gen_moving_average({1.0}, BaseDist{}, 100000, 5);
    CHECK(std::abs(mean_of(p.values)) < 0.01);
    CHECK(sample_variance(p.values) == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("moving average rejects negative weights") {
    CHECK_THROWS_AS(gen_moving_average({1.0, -1.0}, BaseDist{}, 8, 1), std::invalid_argument);
}

TEST_CASE("monotone transform: identity, affine scaling, recentering") {
    const auto base = gen_iid(BaseDist{}, 4096, 9);
    const auto same = gen_monotone_transform(FamilySpec::iid_normal(),
                                             MonotoneMap::identity(), 4096, 9, false);
    CHECK(same.values == base.values);

    MonotoneMap twice;
    twice.slope = 2.0;
    const auto scaled =
        gen_monotone_transform(FamilySpec::iid_normal(), twice, 100000, 9, true);
    CHECK(sample_variance(scaled.values) == Catch::Approx(4.0).margin(0.1));

    MonotoneMap th;
    th.name = MapName::tanh_scaled;
    const auto squashed =
        gen_monotone_transform(FamilySpec::iid_normal(), th, 100000, 10, true);
    const double se = std::sqrt(sample_variance(squashed.values) / 100000.0);
    CHECK(std::abs(mean_of(squashed.values)) < 3.0 * se);
}

TEST_CASE("monotone transform rejects unregistered maps") {
    json j = {{"name", "sigmoid"}};
    CHECK_THROWS_AS(monotone_map_from_json(j), std::invalid_argument);
}

TEST_CASE("common factor paths are constant") {
    const auto p = gen_common_factor(BaseDist{}, 5, 21);
    for (double v : p.values) CHECK(v == p.values[0]);
    const auto prof = analytic_profile(FamilySpec::common_factor(), 10);
    CHECK(s_n_squared(prof) == 100.0);
}

TEST_CASE("markov chain: memoryless case, persistence, monotonicity guard") {
    const auto iidish = gen_markov_two_state(0.5, 0.5, 100000, 2);
    // Centered Bernoulli(1/2): values in {-0.5, 0.5}, mean ~ 0, no memory.
    for (double v : iidish.values) REQUIRE((v == 0.5 || v == -0.5));
    CHECK(std::abs(mean_of(iidish.values)) < 0.01);

    const auto sticky = gen_markov_two_state(0.9, 0.9, 100000, 2);
    std::vector<double> a(sticky.values.begin(), sticky.values.end() - 1);
    std::vector<double> b(sticky.values.begin() + 1, sticky.values.end());
    const double corr = empirical_cov(a, b).value /
                        std::sqrt(sample_variance(a) * sample_variance(b));
    // Two-state lag-1 autocorrelation equals the second transition
    // eigenvalue trace(P) - 1 = p00 + p11 - 1.
    const double eig = 0.9 + 0.9 - 1.0;
    CHECK(corr == Catch::Approx(eig).margin(0.02));

    CHECK_THROWS_AS(gen_markov_two_state(0.2, 0.1, 10, 1), std::invalid_argument);
}

TEST_CASE("replicate is order- and parallelism-independent") {
    const auto serial = replicate(FamilySpec::geometric_gaussian(0.4), 64, 50, 42, 1);
    const auto parallel = replicate(FamilySpec::geometric_gaussian(0.4), 64, 50, 42, 8);
    REQUIRE(serial.reps == parallel.reps);
    for (std::size_t i = 0; i < serial.reps; ++i)
        REQUIRE(serial.paths[i].values == parallel.paths[i].values);
    CHECK_THROWS_AS(replicate(FamilySpec::iid_normal(), 4, 0, 1), std::invalid_argument);
}

TEST_CASE("replicate variance at n = 1") {
    const auto set = replicate(FamilySpec::iid_normal(), 1, 100000, 6);
    std::vector<double> xs(set.reps);
    for (std::size_t i = 0; i < set.reps; ++i) xs[i] = set.paths[i].values[0];
    CHECK(sample_variance(xs) == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("association smoke test across the built-in families") {
    const std::vector<FamilySpec> families = {
        FamilySpec::iid_normal(),
        FamilySpec::iid(BaseDist{DistName::exponential}),
        FamilySpec::geometric_gaussian(0.5),
        FamilySpec::moving_average({1.0, 1.0}),
        FamilySpec::common_factor(),
        FamilySpec::markov(0.9, 0.9),
        FamilySpec::monotone(FamilySpec::geometric_gaussian(0.5),
                             MonotoneMap{MapName::tanh_scaled, 1, 0, 1, {}, {}}),
    };
    const auto battery = default_battery();
    std::uint64_t seed = 100;
    for (const auto& f : families) {
        const auto set = replicate(f, 8, 10000, seed++);
        const auto probe = association_probe(set, battery);
        INFO("family kind " << to_string(f.kind));
        CHECK_FALSE(probe.violation);
    }
}

TEST_CASE("marginal draws agree with path marginals for the transform") {
    // transform_marginal_mean is a pure function of the spec.
    auto f = FamilySpec::monotone(FamilySpec::geometric_gaussian(0.5),
                                  MonotoneMap{MapName::piecewise_linear, 1, 0, 1,
                                              {-2.0, 0.0, 2.0}, {-1.0, 0.0, 3.0}});
    const double m1 = transform_marginal_mean(f);
    const double m2 = transform_marginal_mean(f);
    CHECK(m1 == m2);
    // Recentered output should have near-zero mean.
    const auto p = generate_path(f, 200000, 31);
    const double se = std::sqrt(sample_variance(p.values) / 200000.0);
    CHECK(std::abs(mean_of(p.values)) < 4.0 * se + 1e-3);
}
