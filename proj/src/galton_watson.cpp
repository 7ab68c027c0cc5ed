#include "lowtail/galton_watson.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "lowtail/errors.hpp"

namespace lowtail {

namespace {

std::uint64_t next_generation_pmf(std::uint64_t z, const std::vector<double>& p,
                                  RngStream& rng) {
    // Multinomial split of z individuals over the support, via sequential
    // conditional binomials; equal in law to summing z offspring draws.
    std::uint64_t remaining = z;
    double mass_left = 1.0;
    std::uint64_t next = 0;
    for (std::size_t k = 0; k < p.size() && remaining > 0; ++k) {
        if (p[k] <= 0.0) continue;
        if (mass_left - p[k] <= 1e-15) {
            next += std::uint64_t(k) * remaining;
            remaining = 0;
            break;
        }
        const double cond = std::min(1.0, p[k] / mass_left);
        std::binomial_distribution<std::int64_t> binom(std::int64_t(remaining), cond);
        const std::uint64_t c = std::uint64_t(binom(rng));
        next += std::uint64_t(k) * c;
        remaining -= c;
        mass_left -= p[k];
    }
    return next;
}

std::uint64_t next_generation_geometric(std::uint64_t z, double a, RngStream& rng) {
    // Sum of z geometric draws on {1,2,...} equals z plus a negative
    // binomial, sampled exactly as Poisson with Gamma(z, a/(1-a)) mean.
    std::gamma_distribution<double> gamma(double(z), a / (1.0 - a));
    const double lambda = gamma(rng);
    if (lambda <= 0.0) return z;
    std::poisson_distribution<std::int64_t> poisson(lambda);
    return z + std::uint64_t(poisson(rng));
}

void require_no_extinction(const OffspringDistribution& dist) {
    if (dist.p0() > 0.0)
        throw DegenerateDistributionError(
            "simulate_generations: p0 > 0, prune the distribution first");
}

} // namespace

GenerationTrace simulate_generations(const OffspringDistribution& dist, int n,
                                     RngStream& rng, std::uint64_t cap) {
    require_no_extinction(dist);
    if (n < 0) throw std::invalid_argument("simulate_generations: n must be >= 0");

    GenerationTrace trace;
    trace.sizes.reserve(std::size_t(n) + 1);
    std::uint64_t z = 1;
    trace.sizes.push_back(z);
    for (int k = 0; k < n; ++k) {
        z = dist.is_geometric() ? next_generation_geometric(z, dist.geo_param(), rng)
                                : next_generation_pmf(z, dist.pmf(), rng);
        if (z > cap)
            throw ResourceLimitError("simulate_generations: generation size " +
                                     std::to_string(z) + " exceeds cap " +
                                     std::to_string(cap));
        trace.sizes.push_back(z);
    }
    return trace;
}

double sample_W(const OffspringDistribution& dist, int depth, RngStream& rng,
                std::uint64_t cap) {
    require_no_extinction(dist);
    std::uint64_t z = 1;
    for (int k = 0; k < depth; ++k) {
        z = dist.is_geometric() ? next_generation_geometric(z, dist.geo_param(), rng)
                                : next_generation_pmf(z, dist.pmf(), rng);
        if (z > cap)
            throw ResourceLimitError("sample_W: generation size exceeds cap");
    }
    return double(z) * std::pow(dist.mean(), -double(depth));
}

double sample_W_conditioned_minimal(const OffspringDistribution& dist,
                                    int condition_depth, int total_depth,
                                    RngStream& rng, std::uint64_t cap) {
    require_no_extinction(dist);
    if (condition_depth < 0 || condition_depth > total_depth)
        throw std::invalid_argument(
            "sample_W_conditioned_minimal: need 0 <= condition_depth <= total_depth");
    if (condition_depth == 0) return sample_W(dist, total_depth, rng, cap);

    const BranchingParams params = derive_params(dist);
    if (params.regime != Regime::boettcher)
        throw InvalidRegimeError(
            "sample_W_conditioned_minimal: polynomial regime; condition on a "
            "single line (Z_k = 1) instead");

    // Given minimal growth up to generation k the tree holds exactly nu^k
    // individuals there, each spawning an independent subtree.
    std::uint64_t z = 1;
    for (int j = 0; j < condition_depth; ++j) {
        if (z > cap / std::uint64_t(params.nu))
            throw ResourceLimitError(
                "sample_W_conditioned_minimal: nu^k exceeds cap");
        z *= std::uint64_t(params.nu);
    }
    for (int k = condition_depth; k < total_depth; ++k) {
        z = dist.is_geometric() ? next_generation_geometric(z, dist.geo_param(), rng)
                                : next_generation_pmf(z, dist.pmf(), rng);
        if (z > cap)
            throw ResourceLimitError(
                "sample_W_conditioned_minimal: generation size exceeds cap");
    }
    return double(z) * std::pow(dist.mean(), -double(total_depth));
}

double minimal_conditioning_log_prob(const BranchingParams& params, int k) {
    if (k < 0) throw std::invalid_argument("minimal_conditioning_log_prob: k < 0");
    if (k == 0) return 0.0;
    if (params.regime != Regime::boettcher)
        throw InvalidRegimeError("minimal_conditioning_log_prob: stretched regime only");
    const double generations =
        (std::pow(double(params.nu), double(k)) - 1.0) / (double(params.nu) - 1.0);
    return generations * std::log(params.p_nu);
}

} // namespace lowtail
