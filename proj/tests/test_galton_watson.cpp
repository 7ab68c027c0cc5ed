#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lowtail/errors.hpp"
#include "lowtail/galton_watson.hpp"
#include "lowtail/stats.hpp"
#include "oracles.hpp"

using namespace lowtail;

namespace {
OffspringDistribution pmf(std::vector<double> p) {
    return OffspringDistribution::from_pmf(std::move(p));
}
} // namespace

TEST_CASE("binary tree generations are deterministic") {
    RngStream rng(1, 0);
    const auto trace = simulate_generations(pmf({0.0, 0.0, 1.0}), 3, rng);
    CHECK(trace.sizes == std::vector<std::uint64_t>{1, 2, 4, 8});
}

TEST_CASE("first generation matches the offspring law") {
    const auto d = pmf({0.0, 0.5, 0.5});
    RngStream rng(2, 0);
    int ones = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) {
        const auto trace = simulate_generations(d, 1, rng);
        ones += trace.sizes[1] == 1 ? 1 : 0;
    }
    const auto est = wilson_interval(std::uint64_t(ones), n);
    CHECK(est.ci_low <= 0.5);
    CHECK(0.5 <= est.ci_high);
}

TEST_CASE("minimal branching bound holds on every trace") {
    const auto d = pmf({0.0, 0.0, 0.5, 0.5});
    RngStream rng(3, 0);
    for (int i = 0; i < 200; ++i) {
        const auto trace = simulate_generations(d, 12, rng, 1ull << 40);
        for (std::size_t k = 0; k < trace.sizes.size(); ++k)
            REQUIRE(trace.sizes[k] >= (std::uint64_t(1) << (2 * k)) / (1ull << k));
        for (std::size_t k = 0; k < trace.sizes.size(); ++k)
            REQUIRE(trace.sizes[k] >= (std::uint64_t(1) << k));
    }
}

TEST_CASE("generation cap raises a resource error") {
    RngStream rng(4, 0);
    CHECK_THROWS_AS(simulate_generations(pmf({0.0, 0.0, 1.0}), 40, rng, 1'000'000),
                    ResourceLimitError);
}

TEST_CASE("martingale truncation for the deterministic tree") {
    RngStream rng(5, 0);
    for (int i = 0; i < 10; ++i)
        CHECK(sample_W(pmf({0.0, 0.0, 1.0}), 20, rng, 1ull << 40) == 1.0);
}

TEST_CASE("martingale mean is one within four standard errors") {
    for (auto d : {pmf({0.0, 0.5, 0.5}), pmf({0.0, 0.0, 0.5, 0.5})}) {
        RngStream rng(6, 0);
        const int n = 20'000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = sample_W(d, 20, rng, 1ull << 40);
            sum += w;
            sumsq += w * w;
        }
        const double mean = sum / n;
        const double sd = std::sqrt((sumsq - n * mean * mean) / (n - 1));
        CHECK(std::abs(mean - 1.0) <= 4.0 * sd / std::sqrt(double(n)));
    }
}

TEST_CASE("geometric martingale limit is standard exponential") {
    const auto d = OffspringDistribution::geometric(0.5);
    RngStream rng(7, 0);
    const int n = 30'000;
    std::vector<double> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) samples.push_back(sample_W(d, 25, rng, 1ull << 40));
    std::sort(samples.begin(), samples.end());
    const double d_ks = oracles::ks_against_cdf(samples, oracles::exp1_cdf);
    CHECK(d_ks < 0.015);
}

TEST_CASE("conditioned minimal-growth sampling") {
    const auto d = pmf({0.0, 0.0, 0.5, 0.5});
    const auto params = derive_params(d);

    // Empty conditioning reduces to plain sampling.
    RngStream a(8, 0), b(8, 0);
    CHECK(sample_W_conditioned_minimal(d, 0, 12, a, 1ull << 40) ==
          sample_W(d, 12, b, 1ull << 40));

    // Fully minimal tree: W_n = (nu/mu)^n exactly.
    RngStream rng(9, 0);
    for (int n : {2, 5, 8})
        CHECK(sample_W_conditioned_minimal(d, n, n, rng, 1ull << 40) ==
              doctest::Approx(std::pow(0.8, n)).epsilon(1e-12));

    CHECK(minimal_conditioning_log_prob(params, 3) ==
          doctest::Approx(std::log(0.0078125)).epsilon(1e-12));

    const auto schroeder = pmf({0.0, 0.5, 0.5});
    RngStream r2(10, 0);
    CHECK_THROWS_AS(sample_W_conditioned_minimal(schroeder, 2, 8, r2, 1ull << 40),
                    InvalidRegimeError);
}

TEST_CASE("density solver fixes the deterministic point mass") {
    GridSpec spec;
    const auto grid = density_fixed_point(pmf({0.0, 0.0, 1.0}), spec, 25);
    CHECK(grid.mean() == doctest::Approx(1.0).epsilon(1e-9));
    // All mass within a few bins of x = 1.
    const double below = grid.tail_below(0.98);
    const double above = 1.0 - grid.tail_below(1.02);
    CHECK(below < 1e-9);
    CHECK(above < 1e-9);
    CHECK(grid.tail_below(0.5) == doctest::Approx(0.0));
}

TEST_CASE("density solver reproduces the exponential law") {
    const auto grid =
        density_fixed_point(OffspringDistribution::geometric(0.5), GridSpec{}, 60);
    CHECK(grid.mean() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(grid.overflow_mass() < 1e-10);
    CHECK(grid.converged());
    CHECK(grid.tail_below(0.1) ==
          doctest::Approx(1.0 - std::exp(-0.1)).epsilon(2e-2));
    CHECK(std::abs(grid.tail_below(0.1) - (1.0 - std::exp(-0.1))) < 2e-3);
    CHECK(std::abs(grid.tail_below(0.5) - (1.0 - std::exp(-0.5))) < 2e-3);
    CHECK(std::abs(grid.tail_below(2.0) - (1.0 - std::exp(-2.0))) < 2e-3);

    // Left-tail reads across several decades stay near the exact law.
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const double exact = 1.0 - std::exp(-eps);
        CHECK(grid.tail_below(eps) == doctest::Approx(exact).epsilon(0.05));
    }
}

TEST_CASE("density tail reads") {
    GridSpec spec;
    const auto grid = density_fixed_point(pmf({0.0, 0.0, 1.0}), spec, 5);
    CHECK(grid.tail_below(spec.x_max) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(grid.tail_below(0.5) == doctest::Approx(0.0));
    CHECK(!grid.covers(1e-9));
    CHECK(grid.tail_below(1e-9) == 0.0);
    CHECK(grid.covers(1e-3));
}

TEST_CASE("density self-consistency: one more step changes tails little") {
    const auto d = pmf({0.0, 0.5, 0.5});
    const auto g60 = density_fixed_point(d, GridSpec{}, 45);
    const auto g61 = density_fixed_point(d, GridSpec{}, 46);
    for (double eps : {1e-3, 1e-2, 1e-1, 0.5, 1.0, 2.0})
        CHECK(std::abs(g60.tail_below(eps) - g61.tail_below(eps)) < 1e-4);
    CHECK(g61.last_tv() < 1e-6);
}
