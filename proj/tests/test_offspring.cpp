#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lowtail/errors.hpp"
#include "lowtail/offspring.hpp"
#include "lowtail/rng.hpp"

using namespace lowtail;

namespace {
OffspringDistribution pmf(std::vector<double> p) {
    return OffspringDistribution::from_pmf(std::move(p));
}
} // namespace

TEST_CASE("parameter derivation in the polynomial regime") {
    // p1 = p2 = 1/2
    const auto params = derive_params(pmf({0.0, 0.5, 0.5}));
    CHECK(params.mu == doctest::Approx(1.5));
    CHECK(params.regime == Regime::schroeder);
    CHECK(params.tau == doctest::Approx(1.7095112913514547).epsilon(1e-12));

    const auto geo = derive_params(OffspringDistribution::geometric(0.5));
    CHECK(geo.mu == doctest::Approx(2.0));
    CHECK(geo.p1 == doctest::Approx(0.5));
    CHECK(std::abs(geo.tau - 1.0) < 1e-12);
}

TEST_CASE("parameter derivation in the stretched regime") {
    // p2 = p3 = 1/2
    const auto params = derive_params(pmf({0.0, 0.0, 0.5, 0.5}));
    CHECK(params.mu == doctest::Approx(2.5));
    CHECK(params.nu == 2);
    CHECK(params.p_nu == doctest::Approx(0.5));
    CHECK(params.regime == Regime::boettcher);
    CHECK(params.beta == doctest::Approx(0.7564707973660297).epsilon(1e-12));
    CHECK(params.beta_ratio == doctest::Approx(3.1062837).epsilon(1e-6));
}

TEST_CASE("parameter derivation rejects degenerate laws") {
    CHECK_THROWS_AS(derive_params(pmf({0.0, 0.0, 1.0})), DegenerateDistributionError);
    CHECK_THROWS_AS(derive_params(pmf({0.5, 0.5})), DegenerateDistributionError);
    CHECK_THROWS_AS(derive_params(pmf({0.25, 0.0, 0.75})), DegenerateDistributionError);
}

TEST_CASE("generating function evaluation") {
    const auto d = pmf({0.25, 0.0, 0.75});
    CHECK(d.pgf(1.0) == doctest::Approx(1.0));
    CHECK(pmf({0.0, 0.0, 1.0}).pgf(0.5) == doctest::Approx(0.25));
    CHECK(d.pgf(1.0 / 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(OffspringDistribution::geometric(0.5).pgf(1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(d.pgf(1.5), std::invalid_argument);
}

TEST_CASE("extinction probability") {
    CHECK(extinction_probability(pmf({0.0, 0.5, 0.5})) == doctest::Approx(0.0));
    CHECK(extinction_probability(pmf({0.25, 0.0, 0.75})) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(extinction_probability(pmf({0.5, 0.0, 0.5})),
                    DegenerateDistributionError); // mean exactly 1
}

TEST_CASE("pruning the law with extinction") {
    const auto reduced = prune(pmf({0.25, 0.0, 0.75}));
    REQUIRE(!reduced.is_geometric());
    CHECK(reduced.pmf()[0] == doctest::Approx(0.0));
    CHECK(reduced.pmf()[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(reduced.pmf()[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(reduced.mean() == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("pruning is the identity without extinction") {
    const auto d = pmf({0.0, 0.3, 0.7});
    const auto reduced = prune(d);
    CHECK(reduced.pmf() == d.pmf());
    const auto g = OffspringDistribution::geometric(0.4);
    CHECK(prune(g).is_geometric());
}

TEST_CASE("pruning properties over random supercritical laws") {
    RngStream rng(99, 0);
    int tested = 0;
    while (tested < 300) {
        // Random law on {0..4} with mean > 1 and a chance of extinction.
        std::vector<double> p(5);
        double sum = 0.0;
        for (auto& v : p) sum += v = rng.uniform();
        for (auto& v : p) v /= sum;
        double mean = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) mean += double(k) * p[k];
        if (mean <= 1.05) continue;
        ++tested;

        const auto d = pmf(p);
        const auto reduced = prune(d);
        CHECK(reduced.p0() == 0.0);
        CHECK(std::abs(reduced.mean() - d.mean()) < 1e-10);

        // Idempotence, coefficient-wise.
        const auto twice = prune(reduced);
        REQUIRE(twice.pmf().size() == reduced.pmf().size());
        for (std::size_t k = 0; k < twice.pmf().size(); ++k)
            CHECK(twice.pmf()[k] == doctest::Approx(reduced.pmf()[k]).epsilon(1e-10));

        CHECK_NOTHROW(derive_params(reduced));
    }
}

TEST_CASE("geometric laws always have unit polynomial exponent") {
    RngStream rng(5, 1);
    for (int i = 0; i < 50; ++i) {
        const double a = 0.02 + 0.96 * rng.uniform();
        const auto params = derive_params(OffspringDistribution::geometric(a));
        CHECK(std::abs(params.tau - 1.0) < 1e-12);
    }
}

TEST_CASE("text format round trip") {
    const auto d = OffspringDistribution::parse("pmf: 0:0.25, 2:0.75");
    CHECK(d.prob(0) == doctest::Approx(0.25));
    CHECK(d.prob(2) == doctest::Approx(0.75));
    const auto d2 = OffspringDistribution::parse(" pmf :1 : 0.5 ,2:0.5 ");
    CHECK(d2.prob(1) == doctest::Approx(0.5));
    const auto g = OffspringDistribution::parse("geometric: 0.5");
    CHECK(g.is_geometric());
    CHECK(g.geo_param() == doctest::Approx(0.5));
    CHECK(OffspringDistribution::parse(g.to_text()).geo_param() == doctest::Approx(0.5));
    CHECK_THROWS_AS(OffspringDistribution::parse("poisson: 2"), std::invalid_argument);
    CHECK_THROWS_AS(OffspringDistribution::parse("pmf: 1:0.5, 2:0.6"),
                    std::invalid_argument);
}
