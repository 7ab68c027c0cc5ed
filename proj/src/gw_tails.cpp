#include "lowtail/gw_tails.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "lowtail/errors.hpp"
#include "lowtail/parallel.hpp"

namespace lowtail {

namespace {

// Bracketing index with a snap tolerance so epsilon equal to (or a hair off)
// an exact power lands on the boundary index.
int bracket_index(double epsilon, double log_base) {
    const double t = std::log(epsilon) / log_base;
    return std::max(1, int(std::ceil(t - 1e-9)));
}

} // namespace

double schroeder_lower_bound(const BranchingParams& params, double c_w1,
                             double epsilon) {
    if (params.regime != Regime::schroeder)
        throw InvalidRegimeError("schroeder_lower_bound: polynomial regime only");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("schroeder_lower_bound: epsilon must be in (0,1)");
    if (!(c_w1 > 0.0 && c_w1 < 1.0))
        throw std::invalid_argument("schroeder_lower_bound: c_w1 must be in (0,1)");
    const int n = bracket_index(epsilon, -std::log(params.mu));
    return c_w1 * std::pow(params.p1, double(n));
}

BoettcherStrategyBound boettcher_strategy_bound(const BranchingParams& params,
                                                double epsilon) {
    if (params.regime != Regime::boettcher)
        throw InvalidRegimeError("boettcher_strategy_bound: stretched regime only");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("boettcher_strategy_bound: epsilon must be in (0,1)");
    BoettcherStrategyBound b;
    b.n = bracket_index(epsilon, std::log(double(params.nu) / params.mu));
    const double nu = double(params.nu);
    const double generations = (std::pow(nu, double(b.n) + 1.0) - 1.0) / (nu - 1.0);
    b.log_prob = generations * std::log(params.p_nu);
    return b;
}

double boettcher_strategy_constant(const BranchingParams& params) {
    if (params.regime != Regime::boettcher)
        throw InvalidRegimeError("boettcher_strategy_constant: stretched regime only");
    const double nu = double(params.nu);
    return -std::log(params.p_nu) * nu * nu / (nu - 1.0);
}

std::vector<double> default_tau_grid() {
    std::vector<double> grid(64);
    const double lo = std::log(1e-3), hi = std::log(50.0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = std::exp(lo + (hi - lo) * double(i) / double(grid.size() - 1));
    return grid;
}

ChebyshevBound boettcher_chebyshev_upper(const BranchingParams& params,
                                         const DensityGrid& density,
                                         std::span<const double> tau_grid) {
    if (params.regime != Regime::boettcher)
        throw InvalidRegimeError("boettcher_chebyshev_upper: stretched regime only");
    if (tau_grid.empty())
        throw std::invalid_argument("boettcher_chebyshev_upper: empty tau grid");

    const double ratio = double(params.nu) / params.mu;
    ChebyshevBound best;
    best.phi_min = std::numeric_limits<double>::infinity();
    for (double tau : tau_grid) {
        double phi = 0.0;
        for (std::size_t i = 0; i < density.n_bins(); ++i) {
            const double m = density.masses()[i];
            if (m <= 0.0) continue;
            phi += m * std::exp(tau * (ratio - density.centroid(i)));
        }
        if (phi < best.phi_min) {
            best.phi_min = phi;
            best.tau_star = tau;
        }
    }
    if (!(best.phi_min < 1.0))
        throw NoFeasibleTauError(
            "boettcher_chebyshev_upper: no tau with phi < 1 (density unconverged?)");
    best.c = -std::log(best.phi_min) / (double(params.nu) * double(params.nu));
    return best;
}

std::vector<double> beta_sequence(const DensityGrid& density,
                                  const BranchingParams& params, int n_max) {
    if (params.regime != Regime::schroeder)
        throw InvalidRegimeError("beta_sequence: polynomial regime only");
    if (n_max < 0) throw std::invalid_argument("beta_sequence: n_max must be >= 0");
    std::vector<double> betas(std::size_t(n_max) + 1, 0.0);
    for (int i = 0; i <= n_max; ++i) {
        const double eps = std::pow(params.mu, -double(i));
        // Below grid coverage the tail reads as a flagged zero, which keeps
        // the running products finite and stable.
        betas[std::size_t(i)] = density.tail_below(eps) / params.p1;
    }
    return betas;
}

std::vector<double> a_tilde_recursion(std::span<const double> betas) {
    for (double b : betas)
        if (b < 0.0)
            throw std::invalid_argument("a_tilde_recursion: betas must be nonnegative");
    std::vector<double> a(betas.size() + 1);
    a[0] = 1.0;
    for (std::size_t i = 0; i < betas.size(); ++i) a[i + 1] = a[i] * (1.0 + betas[i]);
    return a;
}

namespace {

std::vector<double> default_eps_grid(const BranchingParams& params) {
    std::vector<double> grid;
    if (params.regime == Regime::schroeder) {
        for (int n = 2; n <= 12; ++n) grid.push_back(std::pow(params.mu, -double(n)));
    } else {
        const double r = double(params.nu) / params.mu;
        for (int n = 1; n <= 8; ++n) grid.push_back(std::pow(r, double(n)));
    }
    return grid;
}

RegressionFit fit_points(const std::vector<TailPoint>& pts, bool stretched,
                         std::size_t& dropped) {
    std::vector<FitPoint> usable;
    const double one_over_e = std::exp(-1.0);
    for (const auto& pt : pts) {
        if (pt.method == TailMethod::bound_lower || pt.method == TailMethod::bound_upper)
            continue;
        const bool ok = stretched ? (pt.p > 0.0 && pt.p < one_over_e)
                                  : (pt.p > 0.0 && pt.p < 1.0);
        if (ok)
            usable.push_back({pt.epsilon, pt.p});
        else
            ++dropped;
    }
    if (usable.size() < 3)
        throw InsufficientDataError("tail fit: fewer than 3 usable points");
    return stretched ? fit_stretched_exponent(usable) : fit_power_law(usable);
}

} // namespace

TailEstimate experiment_theorem1(const OffspringDistribution& dist,
                                 const Theorem1Config& config) {
    const OffspringDistribution reduced = dist.p0() > 0.0 ? prune(dist) : dist;
    const BranchingParams params = derive_params(reduced);
    const bool stretched = params.regime == Regime::boettcher;

    std::vector<double> grid =
        config.eps_grid.empty() ? default_eps_grid(params) : config.eps_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());

    TailEstimate est;
    est.stretched = stretched;
    est.target_exponent = stretched ? -params.beta_ratio : params.tau;

    std::optional<DensityGrid> density;
    if (config.method == Theorem1Method::density) {
        density = density_fixed_point(reduced, config.grid, config.iterations);
        for (double eps : grid) {
            if (!density->covers(eps)) continue;
            const double p = density->tail_below(eps);
            if (p < 1e-300) continue; // density floor, keep the fit meaningful
            est.points.push_back({eps, p, p, p, TailMethod::density});
        }
    } else if (config.method == Theorem1Method::mc) {
        const auto sizes = batch_sizes(config.budget);
        auto batches = run_work_items<std::vector<double>>(
            config.seed, 0, sizes.size(), config.threads,
            [&](std::size_t b, RngStream& rng) {
                std::vector<double> vals;
                vals.reserve(sizes[b]);
                for (std::uint64_t i = 0; i < sizes[b]; ++i)
                    vals.push_back(sample_W(reduced, config.mc_depth, rng, config.mc_cap));
                return vals;
            });
        std::vector<double> samples;
        samples.reserve(config.budget);
        for (auto& b : batches) samples.insert(samples.end(), b.begin(), b.end());
        std::sort(samples.begin(), samples.end());
        for (double eps : grid) {
            const auto it = std::lower_bound(samples.begin(), samples.end(), eps);
            const auto hits = std::uint64_t(it - samples.begin());
            const BernoulliEstimate be = wilson_interval(hits, samples.size());
            est.points.push_back({eps, be.p_hat, be.ci_low, be.ci_high, TailMethod::mc});
        }
    } else {
        if (params.regime != Regime::boettcher)
            throw InvalidRegimeError(
                "experiment_theorem1: conditioned sampling is a stretched-regime "
                "cross-check");
        // Lower-bound cross-check: P{W < eps} >= P{minimal growth to depth
        // n+1} * P{W < eps | minimal growth}.
        for (double eps : grid) {
            const auto bound = boettcher_strategy_bound(params, eps);
            const int k = bound.n + 1;
            const int depth = std::max(config.mc_depth, k + 8);
            const auto sizes = batch_sizes(config.budget);
            auto batches = run_work_items<std::uint64_t>(
                RngStream::derive_seed(config.seed, std::uint64_t(bound.n)), 0,
                sizes.size(), config.threads, [&](std::size_t b, RngStream& rng) {
                    std::uint64_t hits = 0;
                    for (std::uint64_t i = 0; i < sizes[b]; ++i)
                        if (sample_W_conditioned_minimal(reduced, k, depth, rng,
                                                         config.mc_cap) < eps)
                            ++hits;
                    return hits;
                });
            std::uint64_t hits = 0;
            for (auto h : batches) hits += h;
            const BernoulliEstimate be = wilson_interval(hits, config.budget);
            const double scale = std::exp(minimal_conditioning_log_prob(params, k));
            est.points.push_back({eps, be.p_hat * scale, be.ci_low * scale,
                                  be.ci_high * scale, TailMethod::bound_lower});
        }
    }

    if (config.method == Theorem1Method::conditioned_mc) {
        // Conditioned points are lower bounds; fit them for display only.
        std::vector<TailPoint> copy = est.points;
        for (auto& pt : copy) pt.method = TailMethod::mc;
        est.fit = fit_points(copy, stretched, est.dropped_points);
    } else {
        est.fit = fit_points(est.points, stretched, est.dropped_points);
    }

    // Analytic bracketing curves.
    if (params.regime == Regime::schroeder && density.has_value()) {
        const double c_w1 = density->tail_below(1.0);
        for (double eps : grid)
            est.points.push_back({eps, schroeder_lower_bound(params, c_w1, eps), 0.0,
                                  0.0, TailMethod::bound_lower});
    } else if (params.regime == Regime::boettcher) {
        for (double eps : grid) {
            const auto bound = boettcher_strategy_bound(params, eps);
            est.points.push_back(
                {eps, std::exp(bound.log_prob), 0.0, 0.0, TailMethod::bound_lower});
        }
    }

    std::stable_sort(est.points.begin(), est.points.end(),
                     [](const TailPoint& a, const TailPoint& b) {
                         return a.epsilon > b.epsilon;
                     });
    return est;
}

} // namespace lowtail
