#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lowtail/tail_estimate.hpp"
#include "lowtail/walks.hpp"

namespace lowtail {

/// X = integral of prod_j L_j^{q_j}(x) dx for m independent motions,
/// discretized as 2^-level * sum over sites. q_j >= 1 throughout; the small
/// value exponent is 2/(1+q) for m >= 2 and the tail is stretched
/// exponential with exponent 1/q for m = 1.
struct IltFunctional {
    int m = 2;
    std::vector<double> q;
    StopRule stop = StopRule::exit_unit_interval;
    double horizon = 1.0; // fixed-time rule only

    double q_total() const;
    /// Magnitude of the predicted exponent (2/(1+q) resp. 1/q).
    double exponent_target() const;
    void validate() const;
};

/// Riemann-sum value of the intersection functional; exact zero when the
/// supports are disjoint. All fields must share one level.
double mutual_ilt(std::span<const LocalTimeField> fields,
                  std::span<const double> q_exponents);

struct McRun {
    std::uint64_t budget = 100'000;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Draws `budget` values of the discretized functional (walks started at the
/// origin) in deterministic work-item order.
std::vector<double> sample_ilt_values(const IltFunctional& functional, int level,
                                      const McRun& run);

/// Tail curve P{X < eps} with Wilson intervals on a quantile-anchored grid
/// (empty `eps_grid`: the {0.1,0.2,0.5,1,2,5}% empirical quantiles of a
/// pilot fifth of the budget). Power-law fit for m >= 2; stretched fit over
/// points with p < 1/e and at least 30 successes for m = 1.
TailEstimate estimate_tail(const IltFunctional& functional, int level,
                           std::vector<double> eps_grid, const McRun& run);

/// Start sites and exit orientations for the disjointness probe: motion j
/// starts at +offset and exits upward when upper[j], else at -offset.
struct StartConfiguration {
    std::vector<bool> upper;
    int eps_site_offset = 1;

    int m() const { return int(upper.size()); }
    void validate() const; // proper, nonempty orientation set
};

/// P{the m walk ranges up to their exits have empty common intersection},
/// started from +/- eps. Scales like 2 l (m-l) eps^2 for small eps.
BernoulliEstimate disjointness_probe(const StartConfiguration& start, int level,
                                     const McRun& run);

/// Two-sample KS distance between X at the unit exit and X at the exit from
/// +/- eta rescaled by eta^-(1+q). The rescaled configuration runs on the
/// lattice coarsened by log2(eta), which the diffusive rescaling maps
/// exactly onto the unit problem, so the statistic measures sampler noise
/// only. eta must be a power of two; eta = 1 compares a sample with itself.
double scaling_check(const IltFunctional& functional, int eta, int level,
                     const McRun& run_per_side);

/// 1 / E[ integral L^q at the unit exit ], the scale constant that gives the
/// per-step functionals mean one. Exactly 1 for q = 1 up to the 4^-level
/// duration correction.
double estimate_cq(double q, int level, const McRun& run);

struct SelfIltBound {
    double log_event_prob = 0.0;     // 2^n log(1/2), straight-run embedded walk
    BernoulliEstimate lln_conditional; // P{2^-n sum Y_j <= 2 | straight run}
    double c_q = 0.0;                // scale constant used for the Y_j
};

/// Realises the straight-run event {N(n) = 2^n} with conditioned monotone
/// segments at level n + fine_offset and measures the law-of-large-numbers
/// factor of the strategy lower bound.
SelfIltBound self_ilt_strategy_bound(double q, int n, int fine_offset,
                                     const McRun& run);

/// Two-phase strategy probe: phase one confines every motion to a small
/// interval (radius ~ eps^{1/(1+q)}) that it exits on its assigned side
/// without crossing the halfway barrier, accumulating functional below
/// theta * eps; phase two walks straight out by the gambler's-ruin factor.
struct TwoPhaseConfig {
    double epsilon = 0.01;
    int level = 9;
    int phase_radius = 0;  // sites; 0 picks eps^{1/(1+q)} on the lattice
    double theta = 1.0;    // phase-one functional threshold multiplier
};

struct TwoPhaseResult {
    BernoulliEstimate delta; // measured phase-one probability
    double bound = 0.0;      // delta_hat * (1/2)^m * eps^{2/(1+q)}
    int phase_radius = 0;
};

/// The product bound never exceeds the directly measured P{X < eps}.
TwoPhaseResult two_phase_lower_bound(const IltFunctional& functional,
                                     const TwoPhaseConfig& config,
                                     const McRun& run);

} // namespace lowtail
