#include "lowtail/walks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lowtail/errors.hpp"

namespace lowtail {

double EmbeddedWalk::spacing() const noexcept {
    return std::ldexp(1.0, -level);
}

std::uint32_t EmbeddedWalk::visits_at(int site) const noexcept {
    if (site < site_min || site > site_max()) return 0;
    return visits[std::size_t(site - site_min)];
}

std::uint64_t EmbeddedWalk::total_visits() const noexcept {
    std::uint64_t total = 0;
    for (auto v : visits) total += v;
    return total;
}

EmbeddedWalk simulate_exit_walk(int level, int start_site, RngStream& rng,
                                bool record_path, int box_sites,
                                std::int64_t step_cap) {
    if (level < 0 || level > 30)
        throw std::invalid_argument("simulate_exit_walk: level out of range");
    const int barrier = box_sites > 0 ? box_sites : (1 << level);
    if (std::abs(start_site) >= barrier)
        throw std::invalid_argument("simulate_exit_walk: start outside the interval");

    EmbeddedWalk w;
    w.level = level;
    w.start_site = start_site;
    w.stop_rule = StopRule::exit_unit_interval;
    w.site_min = -barrier;
    w.visits.assign(std::size_t(2 * barrier + 1), 0);

    int site = start_site;
    w.visits[std::size_t(site + barrier)] = 1;
    if (record_path) w.path.push_back(site);

    BitSource bits(rng);
    std::int64_t steps = 0;
    while (site != barrier && site != -barrier) {
        site += bits.next() ? 1 : -1;
        ++steps;
        ++w.visits[std::size_t(site + barrier)];
        if (record_path) w.path.push_back(site);
        if (steps > step_cap)
            throw ResourceLimitError("simulate_exit_walk: step cap exceeded");
    }
    w.n_steps = steps;
    w.exit_side = site > 0 ? 1 : -1;
    return w;
}

EmbeddedWalk simulate_fixed_time_walk(int level, int start_site, double horizon,
                                      RngStream& rng, bool record_path,
                                      std::int64_t step_cap) {
    if (level < 0 || level > 30)
        throw std::invalid_argument("simulate_fixed_time_walk: level out of range");
    if (horizon < 0.0)
        throw std::invalid_argument("simulate_fixed_time_walk: negative horizon");
    const double raw_steps = std::floor(horizon * std::ldexp(1.0, 2 * level));
    if (raw_steps > double(step_cap))
        throw ResourceLimitError("simulate_fixed_time_walk: horizon exceeds step cap");
    const std::int64_t n_steps = std::int64_t(raw_steps);

    // Generous initial span; regrown on the rare excursions beyond it.
    int half = std::max(1 << level,
                        int(4.0 * std::sqrt(double(n_steps) + 1.0)) + 2);
    std::vector<std::uint32_t> visits(std::size_t(2 * half + 1), 0);
    int offset = half - start_site; // visits[site + offset]

    EmbeddedWalk w;
    w.level = level;
    w.start_site = start_site;
    w.stop_rule = StopRule::fixed_steps;
    w.exit_side = 0;
    if (record_path) w.path.push_back(start_site);

    int site = start_site;
    ++visits[std::size_t(site + offset)];
    BitSource bits(rng);
    for (std::int64_t t = 0; t < n_steps; ++t) {
        site += bits.next() ? 1 : -1;
        const int idx = site + offset;
        if (idx < 0 || idx >= int(visits.size())) {
            const std::size_t grow = visits.size();
            std::vector<std::uint32_t> wider(visits.size() + 2 * grow, 0);
            std::copy(visits.begin(), visits.end(), wider.begin() + long(grow));
            visits.swap(wider);
            offset += int(grow);
        }
        ++visits[std::size_t(site + offset)];
        if (record_path) w.path.push_back(site);
    }
    w.n_steps = n_steps;

    // Trim to the visited span.
    std::size_t lo = 0, hi = visits.size();
    while (lo + 1 < hi && visits[lo] == 0) ++lo;
    while (hi > lo + 1 && visits[hi - 1] == 0) --hi;
    w.site_min = int(lo) - offset;
    w.visits.assign(visits.begin() + long(lo), visits.begin() + long(hi));
    return w;
}

EmbeddedWalk simulate_conditioned_segment(int level, int from_site, int up_target,
                                          int down_barrier, RngStream& rng,
                                          bool record_path) {
    if (!(down_barrier < from_site && from_site < up_target))
        throw std::invalid_argument(
            "simulate_conditioned_segment: need down < from < up");

    EmbeddedWalk w;
    w.level = level;
    w.start_site = from_site;
    w.stop_rule = StopRule::exit_unit_interval;
    w.site_min = down_barrier;
    w.visits.assign(std::size_t(up_target - down_barrier + 1), 0);

    int site = from_site;
    ++w.visits[std::size_t(site - down_barrier)];
    if (record_path) w.path.push_back(site);
    std::int64_t steps = 0;
    while (site != up_target) {
        const double h = double(site - down_barrier);
        const double p_up = (h + 1.0) / (2.0 * h);
        site += rng.bernoulli(p_up) ? 1 : -1;
        ++steps;
        ++w.visits[std::size_t(site - down_barrier)];
        if (record_path) w.path.push_back(site);
    }
    w.n_steps = steps;
    w.exit_side = 1;
    return w;
}

double gamblers_ruin(double from, double up, double down) {
    if (!(down < from && from < up))
        throw std::invalid_argument("gamblers_ruin: need down < from < up");
    return (from - down) / (up - down);
}

double LocalTimeField::spacing() const noexcept { return std::ldexp(1.0, -level); }

double LocalTimeField::position(std::size_t i) const noexcept {
    return double(site_min + int(i)) * spacing();
}

double LocalTimeField::value_at(int site) const noexcept {
    if (site < site_min || site > site_max()) return 0.0;
    return values[std::size_t(site - site_min)];
}

double LocalTimeField::integral() const noexcept {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum * spacing();
}

LocalTimeField local_time_field(const EmbeddedWalk& walk) {
    LocalTimeField f;
    f.level = walk.level;
    f.site_min = walk.site_min;
    f.values.resize(walk.visits.size());
    const double scale = walk.spacing();
    for (std::size_t i = 0; i < walk.visits.size(); ++i)
        f.values[i] = scale * double(walk.visits[i]);
    return f;
}

NestedWalks simulate_nested_exit_walk(int fine_level, RngStream& rng,
                                      std::int64_t step_cap) {
    if (fine_level < 1 || fine_level > 30)
        throw std::invalid_argument("simulate_nested_exit_walk: fine_level must be >= 1");
    const int barrier = 1 << fine_level;
    const int coarse_barrier = barrier / 2;

    NestedWalks out;
    out.fine.level = fine_level;
    out.fine.stop_rule = StopRule::exit_unit_interval;
    out.fine.site_min = -barrier;
    out.fine.visits.assign(std::size_t(2 * barrier + 1), 0);
    out.coarse.level = fine_level - 1;
    out.coarse.stop_rule = StopRule::exit_unit_interval;
    out.coarse.site_min = -coarse_barrier;
    out.coarse.visits.assign(std::size_t(2 * coarse_barrier + 1), 0);

    int site = 0;
    int coarse_site = 0;
    out.fine.visits[std::size_t(barrier)] = 1;
    out.coarse.visits[std::size_t(coarse_barrier)] = 1;

    BitSource bits(rng);
    std::int64_t steps = 0;
    std::int64_t coarse_steps = 0;
    while (std::abs(site) != barrier) {
        site += bits.next() ? 1 : -1;
        ++steps;
        ++out.fine.visits[std::size_t(site + barrier)];
        // A coarse step completes when the fine walk reaches a neighbouring
        // even site.
        if (site == 2 * (coarse_site + 1) || site == 2 * (coarse_site - 1)) {
            coarse_site = site / 2;
            ++coarse_steps;
            ++out.coarse.visits[std::size_t(coarse_site + coarse_barrier)];
        }
        if (steps > step_cap)
            throw ResourceLimitError("simulate_nested_exit_walk: step cap exceeded");
    }
    out.fine.n_steps = steps;
    out.fine.exit_side = site > 0 ? 1 : -1;
    out.coarse.n_steps = coarse_steps;
    out.coarse.exit_side = out.fine.exit_side;
    return out;
}

BernoulliEstimate exit_time_tail_probe(int level, double x_scale, double a,
                                       std::uint64_t n_runs, ExtremeSide side,
                                       int m_walks, RngStream& rng) {
    if (!(x_scale > 0.0) || !(a > 0.0))
        throw std::invalid_argument("exit_time_tail_probe: parameters must be positive");
    if (m_walks < 1)
        throw std::invalid_argument("exit_time_tail_probe: m_walks must be >= 1");
    const int barrier = std::max(1, int(std::lround(x_scale * std::ldexp(1.0, level))));
    const double x = double(barrier) * std::ldexp(1.0, -level);
    const double threshold = a * x * x;
    const double time_unit = std::ldexp(1.0, -2 * level);

    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < n_runs; ++r) {
        double extreme = side == ExtremeSide::min_side
                             ? std::numeric_limits<double>::infinity()
                             : 0.0;
        for (int j = 0; j < m_walks; ++j) {
            // Only the exit time is needed here, so skip the visit map.
            BitSource bits(rng);
            int site = 0;
            std::int64_t steps = 0;
            while (std::abs(site) != barrier) {
                site += bits.next() ? 1 : -1;
                ++steps;
            }
            const double sigma = double(steps) * time_unit;
            extreme = side == ExtremeSide::min_side ? std::min(extreme, sigma)
                                                    : std::max(extreme, sigma);
        }
        const bool hit = side == ExtremeSide::min_side ? extreme <= threshold
                                                       : extreme >= threshold;
        if (hit) ++hits;
    }
    return wilson_interval(hits, n_runs);
}

} // namespace lowtail
