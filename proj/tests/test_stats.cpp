#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lowtail/rng.hpp"
#include "lowtail/stats.hpp"

using namespace lowtail;

TEST_CASE("wilson interval at p_hat = 1/2 is symmetric") {
    const auto e = wilson_interval(50, 100, 0.95);
    CHECK(e.p_hat == doctest::Approx(0.5));
    CHECK(std::abs((0.5 - e.ci_low) - (e.ci_high - 0.5)) < 1e-12);
}

TEST_CASE("wilson interval at degenerate counts") {
    // z = 1.959963985 gives ci_high = z^2/(n + z^2) at zero successes.
    const double z2 = kZ95 * kZ95;
    const double expected_high = z2 / (100.0 + z2);

    const auto zero = wilson_interval(0, 100, 0.95);
    CHECK(zero.ci_low == doctest::Approx(0.0));
    CHECK(zero.ci_high == doctest::Approx(expected_high).epsilon(1e-9));
    CHECK(zero.ci_high == doctest::Approx(0.0370).epsilon(2e-3));
    CHECK(zero.ci_high > 0.0);

    const auto full = wilson_interval(100, 100, 0.95);
    CHECK(full.ci_high == doctest::Approx(1.0));
    CHECK(full.ci_low == doctest::Approx(1.0 - expected_high).epsilon(1e-9));
    CHECK(full.ci_low == doctest::Approx(0.9630).epsilon(2e-3));
}

TEST_CASE("wilson interval rejects bad input") {
    CHECK_THROWS_AS(wilson_interval(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(wilson_interval(5, 4), std::invalid_argument);
    CHECK_THROWS_AS(wilson_interval(1, 2, 1.5), std::invalid_argument);
}

TEST_CASE("wilson coverage at 95%") {
    // 10000 synthetic experiments per p; the interval must cover p in at
    // least 93% of them.
    for (double p : {0.01, 0.5}) {
        RngStream rng(2024, p < 0.1 ? 0 : 1);
        const std::uint64_t trials = 200;
        int covered = 0;
        const int experiments = 10'000;
        for (int e = 0; e < experiments; ++e) {
            std::uint64_t successes = 0;
            for (std::uint64_t t = 0; t < trials; ++t)
                if (rng.bernoulli(p)) ++successes;
            const auto est = wilson_interval(successes, trials);
            if (est.ci_low <= p && p <= est.ci_high) ++covered;
        }
        CHECK(double(covered) / experiments >= 0.93);
    }
}

TEST_CASE("estimate merging is associative and commutative") {
    const auto a = wilson_interval(3, 10);
    const auto b = wilson_interval(17, 40);
    const auto c = wilson_interval(0, 25);
    const auto ab_c = merge(merge(a, b), c);
    const auto a_bc = merge(a, merge(b, c));
    CHECK(ab_c.successes == a_bc.successes);
    CHECK(ab_c.trials == a_bc.trials);
    CHECK(ab_c.p_hat == a_bc.p_hat);
    CHECK(ab_c.ci_low == a_bc.ci_low);
    CHECK(ab_c.ci_high == a_bc.ci_high);
    const auto ba = merge(b, a);
    const auto ab = merge(a, b);
    CHECK(ab.ci_low == ba.ci_low);
    CHECK(ab.ci_high == ba.ci_high);
}

TEST_CASE("power-law fit recovers exact exponents") {
    std::vector<FitPoint> pts;
    for (double eps : {0.1, 0.2, 0.4}) pts.push_back({eps, eps * eps});
    auto fit = fit_power_law(pts);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.slope_stderr < 1e-10);
    CHECK(fit.r_squared == doctest::Approx(1.0));

    pts.clear();
    for (double eps : {0.05, 0.1, 0.2, 0.4}) pts.push_back({eps, 0.5 * eps});
    fit = fit_power_law(pts);
    CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(std::log(0.5)).epsilon(1e-10));
}

TEST_CASE("power-law fit is exact for any slope in [-10, 10]") {
    RngStream rng(7, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const double slope = -10.0 + 20.0 * rng.uniform();
        std::vector<FitPoint> pts;
        for (double eps : {0.9, 0.95, 1.0, 1.05, 1.1})
            pts.push_back({eps, 0.2 * std::pow(eps, slope)});
        const auto fit = fit_power_law(pts);
        CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-9));
        CHECK(fit.slope_stderr < 1e-8);
    }
}

TEST_CASE("power-law fit under multiplicative noise") {
    RngStream rng(42, 0);
    std::vector<FitPoint> pts;
    for (int i = 1; i <= 10; ++i) {
        const double eps = std::pow(2.0, -i);
        const double noise = std::exp(0.02 * (2.0 * rng.uniform() - 1.0));
        pts.push_back({eps, std::pow(eps, 1.7095) * noise});
    }
    const auto fit = fit_power_law(pts);
    CHECK(fit.slope > 1.6);
    CHECK(fit.slope < 1.8);
}

TEST_CASE("power-law fit rejects unusable probabilities") {
    std::vector<FitPoint> pts{{0.1, 0.5}, {0.2, 1.0}, {0.4, 0.9}};
    CHECK_THROWS_AS(fit_power_law(pts), std::invalid_argument);
    pts = {{0.1, 0.5}, {0.1, 0.5}, {0.1, 0.5}};
    CHECK_THROWS_AS(fit_power_law(pts), std::invalid_argument); // all eps equal
    pts = {{0.1, 0.5}, {0.2, 0.6}};
    CHECK_THROWS_AS(fit_power_law(pts), std::invalid_argument); // too few
}

TEST_CASE("stretched-exponent fit recovers exact exponents") {
    std::vector<FitPoint> pts;
    for (double eps : {0.5, 0.7, 0.9}) pts.push_back({eps, std::exp(-std::pow(eps, -3.0))});
    auto fit = fit_stretched_exponent(pts);
    CHECK(fit.slope == doctest::Approx(-3.0).epsilon(1e-10));

    pts.clear();
    for (double eps : {0.2, 0.4, 0.8}) pts.push_back({eps, std::exp(-2.0 / eps)});
    fit = fit_stretched_exponent(pts);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(std::log(2.0)).epsilon(1e-10));

    pts.clear();
    for (double eps : {0.3, 0.4, 0.5})
        pts.push_back({eps, std::exp(-std::pow(eps, -3.106))});
    fit = fit_stretched_exponent(pts);
    CHECK(fit.slope == doctest::Approx(-3.106).epsilon(1e-9));
}

TEST_CASE("stretched-exponent fit rejects the unstable regime") {
    std::vector<FitPoint> pts{{0.3, 0.5}, {0.4, 0.2}, {0.5, 0.1}};
    CHECK_THROWS_AS(fit_stretched_exponent(pts), std::invalid_argument);
}

TEST_CASE("ks statistic on hand-checked samples") {
    std::vector<double> a{1, 2, 3, 4};
    CHECK(ks_statistic(a, a) == doctest::Approx(0.0));

    std::vector<double> zeros{0, 0, 0}, ones{1, 1, 1};
    CHECK(ks_statistic(zeros, ones) == doctest::Approx(1.0));

    std::vector<double> b{1.5, 2.5, 3.5, 4.5};
    CHECK(ks_statistic(a, b) == doctest::Approx(0.25));

    CHECK_THROWS_AS(ks_statistic({}, a), std::invalid_argument);
}

TEST_CASE("ks statistic symmetry and monotone invariance") {
    RngStream rng(11, 3);
    std::vector<double> a, b;
    for (int i = 0; i < 400; ++i) a.push_back(rng.uniform());
    for (int i = 0; i < 300; ++i) b.push_back(rng.uniform() * rng.uniform());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double d = ks_statistic(a, b);
    CHECK(ks_statistic(b, a) == doctest::Approx(d));

    auto warp = [](double x) { return std::exp(3.0 * x) - 0.5; }; // strictly increasing
    std::vector<double> aw, bw;
    for (double x : a) aw.push_back(warp(x));
    for (double x : b) bw.push_back(warp(x));
    CHECK(ks_statistic(aw, bw) == doctest::Approx(d));
}

TEST_CASE("rng streams are reproducible and distinct") {
    RngStream a(123, 5), b(123, 5), c(123, 6);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 64; ++i) {
        const auto va = a(), vb = b(), vc = c();
        all_equal = all_equal && va == vb;
        any_diff = any_diff || va != vc;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}
