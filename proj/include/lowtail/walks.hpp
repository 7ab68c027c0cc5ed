#pragma once

#include <cstdint>
#include <vector>

#include "lowtail/rng.hpp"
#include "lowtail/stats.hpp"

namespace lowtail {

enum class StopRule { exit_unit_interval, fixed_steps };

inline constexpr std::int64_t kDefaultStepCap = 1'000'000'000ll;

/// Nearest-neighbour walk on the dyadic grid of spacing 2^-level. Site s is
/// position s * 2^-level; visits count every time the walk sits on a site,
/// including the start, so sum(visits) == n_steps + 1 exactly.
struct EmbeddedWalk {
    int level = 0;
    int start_site = 0;
    std::int64_t n_steps = 0;
    int exit_side = 0; // +1 / -1, 0 when stopped by step count
    StopRule stop_rule = StopRule::exit_unit_interval;
    int site_min = 0;                   // site of visits[0]
    std::vector<std::uint32_t> visits;
    std::vector<std::int32_t> path;     // positions per step, only when recorded

    double spacing() const noexcept;
    int site_max() const noexcept { return site_min + int(visits.size()) - 1; }
    std::uint32_t visits_at(int site) const noexcept;
    std::uint64_t total_visits() const noexcept;
};

/// Unbiased walk from `start_site` run until it hits +/- box_sites (defaults
/// to +/-1 in position units, i.e. 2^level sites). From the origin this takes
/// at least 2^level steps.
EmbeddedWalk simulate_exit_walk(int level, int start_site, RngStream& rng,
                                bool record_path = false, int box_sites = 0,
                                std::int64_t step_cap = kDefaultStepCap);

/// Walk of exactly floor(horizon * 2^(2*level)) steps (each grid step has
/// expected Brownian duration 2^-2level); no spatial stopping, the visit map
/// grows as needed.
EmbeddedWalk simulate_fixed_time_walk(int level, int start_site, double horizon,
                                      RngStream& rng, bool record_path = false,
                                      std::int64_t step_cap = kDefaultStepCap);

/// Walk conditioned to hit `up_target` before `down_barrier` via the
/// harmonic transform h(x) = x - down_barrier (step-up probability
/// h(x+1) / (2 h(x))); exact conditional law.
EmbeddedWalk simulate_conditioned_segment(int level, int from_site, int up_target,
                                          int down_barrier, RngStream& rng,
                                          bool record_path = false);

/// Exact probability of hitting `up` before `down` from `from` (martingale
/// identity; holds for the walk and for Brownian motion alike).
double gamblers_ruin(double from, double up, double down);

/// Discretized local time: L(x) = 2^-level * visits(x) per site. With this
/// normalisation the mean profile of exit walks from the origin converges to
/// the analytic 1 - |x| on (-1, 1).
struct LocalTimeField {
    int level = 0;
    int site_min = 0;
    std::vector<double> values;

    double spacing() const noexcept;
    int site_max() const noexcept { return site_min + int(values.size()) - 1; }
    double position(std::size_t i) const noexcept;
    double value_at(int site) const noexcept;
    /// 2^-level * sum of values == (n_steps + 1) * 2^-2level for any walk.
    double integral() const noexcept;
};

LocalTimeField local_time_field(const EmbeddedWalk& walk);

/// Level-(n-1) walk extracted from a level-n walk at its coarse-grid
/// crossing times, alongside the fine walk itself.
struct NestedWalks {
    EmbeddedWalk fine;
    EmbeddedWalk coarse;
};

NestedWalks simulate_nested_exit_walk(int fine_level, RngStream& rng,
                                      std::int64_t step_cap = kDefaultStepCap);

enum class ExtremeSide { min_side, max_side };

/// Monte Carlo estimate of P{min_j sigma_j(x) <= a x^2} (min_side) or
/// P{max_j sigma_j(x) >= a x^2} (max_side) over m independent exit walks
/// from the origin, where sigma is the discrete exit time from (-x, x).
BernoulliEstimate exit_time_tail_probe(int level, double x_scale, double a,
                                       std::uint64_t n_runs, ExtremeSide side,
                                       int m_walks, RngStream& rng);

} // namespace lowtail
