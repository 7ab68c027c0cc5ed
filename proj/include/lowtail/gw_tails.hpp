#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lowtail/galton_watson.hpp"
#include "lowtail/offspring.hpp"
#include "lowtail/tail_estimate.hpp"

namespace lowtail {

/// Polynomial-regime lower bound P{W < eps} >= c_w1 * p1^n with the integer
/// n chosen so mu^-n <= eps < mu^-(n-1); c_w1 = P{W < 1} comes from the
/// density solver.
double schroeder_lower_bound(const BranchingParams& params, double c_w1,
                             double epsilon);

struct BoettcherStrategyBound {
    int n = 0;            // bracketing index: (nu/mu)^n <= eps < (nu/mu)^(n-1)
    double log_prob = 0.0; // log p_nu^{(nu^{n+1}-1)/(nu-1)} of the minimal-growth event
};

/// Minimal-growth strategy: keeping every line at nu children for n+1
/// generations puts W below eps at the returned log-probability cost.
BoettcherStrategyBound boettcher_strategy_bound(const BranchingParams& params,
                                                double epsilon);

/// C = (-log p_nu) nu^2 / (nu - 1), the constant of the strategy envelope
/// -log P{W < eps} <= C eps^{-beta/(1-beta)}.
double boettcher_strategy_constant(const BranchingParams& params);

struct ChebyshevBound {
    double tau_star = 0.0;
    double phi_min = 0.0; // E exp(tau* (nu/mu - W)) < 1
    double c = 0.0;       // -log phi_min / nu^2
};

/// Exponential Chebyshev envelope: phi(tau) = E e^{tau (nu/mu - W)} evaluated
/// on the density grid, minimised over tau_grid; yields
/// -log P{W < eps} >= c eps^{-beta/(1-beta)}.
ChebyshevBound boettcher_chebyshev_upper(const BranchingParams& params,
                                         const DensityGrid& density,
                                         std::span<const double> tau_grid);

/// Log-spaced default search grid for the Chebyshev tau.
std::vector<double> default_tau_grid();

/// beta(i) = P{W < mu^-i} / p1 for i = 0..n_max, read off the density grid.
/// Indices whose mu^-i falls below grid coverage report 0 (same flagged-zero
/// convention as DensityGrid::tail_below).
std::vector<double> beta_sequence(const DensityGrid& density,
                                  const BranchingParams& params, int n_max);

/// Running products a_tilde(n) = prod_{i<n} (1 + beta(i)), a_tilde(0) = 1;
/// bounded iff sum beta(i) converges.
std::vector<double> a_tilde_recursion(std::span<const double> betas);

enum class Theorem1Method { mc, density, conditioned_mc };

struct Theorem1Config {
    Theorem1Method method = Theorem1Method::density;
    std::vector<double> eps_grid; // empty: regime default
    GridSpec grid;
    int iterations = 60;
    int mc_depth = 30;
    std::uint64_t mc_cap = 1ull << 40;
    std::uint64_t budget = 100'000;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// End-to-end exponent experiment: tail points for the requested method,
/// the regime-appropriate fit (power law / stretched exponent), and the
/// analytic bound curves for bracketing display. Distributions with p0 > 0
/// are pruned on entry.
TailEstimate experiment_theorem1(const OffspringDistribution& dist,
                                 const Theorem1Config& config);

} // namespace lowtail
