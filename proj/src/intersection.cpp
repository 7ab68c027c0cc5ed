#include "lowtail/intersection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lowtail/errors.hpp"
#include "lowtail/parallel.hpp"

namespace lowtail {

double IltFunctional::q_total() const {
    double total = 0.0;
    for (double v : q) total += v;
    return total;
}

double IltFunctional::exponent_target() const {
    if (m >= 2) return 2.0 / (1.0 + q_total());
    return 1.0 / q_total();
}

void IltFunctional::validate() const {
    if (m < 1) throw std::invalid_argument("IltFunctional: m must be >= 1");
    if (int(q.size()) != m)
        throw std::invalid_argument("IltFunctional: one exponent per motion");
    for (double v : q)
        if (!(v >= 1.0))
            throw std::invalid_argument("IltFunctional: exponents must be >= 1");
}

namespace {

// x^q for q >= 1, with the common small integer exponents special-cased;
// the generic pow dominates the functional evaluation otherwise.
inline double pow_q(double x, double q) {
    if (q == 1.0) return x;
    if (q == 2.0) return x * x;
    if (q == 3.0) return x * x * x;
    return std::pow(x, q);
}

} // namespace

double mutual_ilt(std::span<const LocalTimeField> fields,
                  std::span<const double> q_exponents) {
    if (fields.empty() || fields.size() != q_exponents.size())
        throw std::invalid_argument("mutual_ilt: one exponent per field");
    const int level = fields[0].level;
    int lo = fields[0].site_min;
    int hi = fields[0].site_max();
    for (const auto& f : fields) {
        if (f.level != level)
            throw LevelMismatchError("mutual_ilt: fields on different levels");
        lo = std::max(lo, f.site_min);
        hi = std::min(hi, f.site_max());
    }
    if (lo > hi) return 0.0;

    double sum = 0.0;
    for (int site = lo; site <= hi; ++site) {
        double prod = 1.0;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const double v = fields[j].values[std::size_t(site - fields[j].site_min)];
            if (v == 0.0) {
                prod = 0.0;
                break;
            }
            prod *= pow_q(v, q_exponents[j]);
        }
        sum += prod;
    }
    return sum * std::ldexp(1.0, -level);
}

namespace {

double one_ilt_sample(const IltFunctional& fn, int level, RngStream& rng,
                      std::vector<LocalTimeField>& fields) {
    fields.clear();
    for (int j = 0; j < fn.m; ++j) {
        EmbeddedWalk w = fn.stop == StopRule::exit_unit_interval
                             ? simulate_exit_walk(level, 0, rng)
                             : simulate_fixed_time_walk(level, 0, fn.horizon, rng);
        fields.push_back(local_time_field(w));
    }
    return mutual_ilt(fields, fn.q);
}

} // namespace

std::vector<double> sample_ilt_values(const IltFunctional& functional, int level,
                                      const McRun& run) {
    functional.validate();
    const auto sizes = batch_sizes(run.budget);
    auto batches = run_work_items<std::vector<double>>(
        run.seed, 0, sizes.size(), run.threads,
        [&](std::size_t b, RngStream& rng) {
            std::vector<double> vals;
            vals.reserve(sizes[b]);
            std::vector<LocalTimeField> fields;
            for (std::uint64_t i = 0; i < sizes[b]; ++i)
                vals.push_back(one_ilt_sample(functional, level, rng, fields));
            return vals;
        });
    std::vector<double> values;
    values.reserve(run.budget);
    for (auto& b : batches) values.insert(values.end(), b.begin(), b.end());
    return values;
}

TailEstimate estimate_tail(const IltFunctional& functional, int level,
                           std::vector<double> eps_grid, const McRun& run) {
    functional.validate();
    std::vector<double> values = sample_ilt_values(functional, level, run);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    if (eps_grid.empty()) {
        // Quantile anchors from a pilot prefix equalise the relative Monte
        // Carlo error across fit points.
        static constexpr double kQuantiles[] = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
        const std::size_t pilot_n = std::max<std::size_t>(values.size() / 5, 1000);
        std::vector<double> pilot(values.begin(),
                                  values.begin() + long(std::min(pilot_n, values.size())));
        std::sort(pilot.begin(), pilot.end());
        for (double qt : kQuantiles) {
            const std::size_t idx = std::min(
                pilot.size() - 1, std::size_t(qt * double(pilot.size())));
            eps_grid.push_back(pilot[idx]);
        }
    }
    std::sort(eps_grid.begin(), eps_grid.end(), std::greater<>());
    eps_grid.erase(std::unique(eps_grid.begin(), eps_grid.end()), eps_grid.end());

    TailEstimate est;
    est.stretched = functional.m == 1;
    est.target_exponent = functional.m >= 2 ? functional.exponent_target()
                                            : -functional.exponent_target();
    for (double eps : eps_grid) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), eps);
        const auto hits = std::uint64_t(it - sorted.begin());
        const BernoulliEstimate be = wilson_interval(hits, sorted.size());
        est.points.push_back({eps, be.p_hat, be.ci_low, be.ci_high, TailMethod::mc});
    }

    // Fit usable points; stretched fits additionally require a minimum
    // success count, since log(-log p) amplifies noise at rare counts.
    std::vector<FitPoint> usable;
    const double one_over_e = std::exp(-1.0);
    const double n = double(sorted.size());
    for (const auto& pt : est.points) {
        bool ok;
        if (est.stretched)
            ok = pt.p > 0.0 && pt.p < one_over_e && pt.p * n >= 30.0;
        else
            ok = pt.p > 0.0 && pt.p < 1.0;
        if (ok)
            usable.push_back({pt.epsilon, pt.p});
        else
            ++est.dropped_points;
    }
    if (usable.size() < 3)
        throw InsufficientDataError("estimate_tail: fewer than 3 usable points");
    est.fit = est.stretched ? fit_stretched_exponent(usable) : fit_power_law(usable);
    return est;
}

void StartConfiguration::validate() const {
    if (upper.size() < 2)
        throw std::invalid_argument("StartConfiguration: need m >= 2 motions");
    if (eps_site_offset < 1)
        throw std::invalid_argument("StartConfiguration: offset must be >= 1 site");
    int n_upper = 0;
    for (bool u : upper) n_upper += u ? 1 : 0;
    if (n_upper == 0 || n_upper == int(upper.size()))
        throw std::invalid_argument(
            "StartConfiguration: orientation set must be proper and nonempty");
}

BernoulliEstimate disjointness_probe(const StartConfiguration& start, int level,
                                     const McRun& run) {
    start.validate();
    const int barrier = 1 << level;
    if (start.eps_site_offset >= barrier)
        throw std::invalid_argument("disjointness_probe: offset outside the interval");

    const auto sizes = batch_sizes(run.budget);
    auto batches = run_work_items<std::uint64_t>(
        run.seed, 0, sizes.size(), run.threads, [&](std::size_t b, RngStream& rng) {
            std::uint64_t hits = 0;
            BitSource bits(rng);
            for (std::uint64_t i = 0; i < sizes[b]; ++i) {
                int max_of_min = -barrier;
                int min_of_max = barrier;
                for (bool up : start.upper) {
                    int site = up ? start.eps_site_offset : -start.eps_site_offset;
                    int lo = site, hi = site;
                    while (std::abs(site) != barrier) {
                        site += bits.next() ? 1 : -1;
                        lo = std::min(lo, site);
                        hi = std::max(hi, site);
                    }
                    max_of_min = std::max(max_of_min, lo);
                    min_of_max = std::min(min_of_max, hi);
                }
                if (max_of_min > min_of_max) ++hits; // common intersection empty
            }
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto h : batches) hits += h;
    return wilson_interval(hits, run.budget);
}

double scaling_check(const IltFunctional& functional, int eta, int level,
                     const McRun& run_per_side) {
    functional.validate();
    if (functional.stop != StopRule::exit_unit_interval)
        throw std::invalid_argument("scaling_check: exit rule only");
    if (eta < 1 || (eta & (eta - 1)) != 0)
        throw std::invalid_argument("scaling_check: eta must be a power of two");
    const int shift = int(std::round(std::log2(double(eta))));
    if (shift >= level)
        throw std::invalid_argument("scaling_check: eta too large for the level");

    std::vector<double> side_a = sample_ilt_values(functional, level, run_per_side);
    std::sort(side_a.begin(), side_a.end());
    if (eta == 1) return ks_statistic(side_a, side_a);

    // Exit from +/- eta on the lattice coarsened by log2(eta): the same
    // number of sites as side A, and exactly the unit problem after
    // rescaling by eta^(1+q).
    const int level_b = level - shift;
    const int box_sites = eta << level_b;
    const double rescale = std::pow(double(eta), -(1.0 + functional.q_total()));
    McRun run_b = run_per_side;
    run_b.seed = RngStream::derive_seed(run_per_side.seed, 0x5ca1e);

    const auto sizes = batch_sizes(run_b.budget);
    auto batches = run_work_items<std::vector<double>>(
        run_b.seed, 0, sizes.size(), run_b.threads,
        [&](std::size_t b, RngStream& rng) {
            std::vector<double> vals;
            vals.reserve(sizes[b]);
            std::vector<LocalTimeField> fields;
            for (std::uint64_t i = 0; i < sizes[b]; ++i) {
                fields.clear();
                for (int j = 0; j < functional.m; ++j)
                    fields.push_back(local_time_field(
                        simulate_exit_walk(level_b, 0, rng, false, box_sites)));
                vals.push_back(rescale * mutual_ilt(fields, functional.q));
            }
            return vals;
        });
    std::vector<double> side_b;
    side_b.reserve(run_b.budget);
    for (auto& b : batches) side_b.insert(side_b.end(), b.begin(), b.end());
    std::sort(side_b.begin(), side_b.end());
    return ks_statistic(side_a, side_b);
}

double estimate_cq(double q, int level, const McRun& run) {
    if (!(q >= 1.0)) throw std::invalid_argument("estimate_cq: q must be >= 1");
    const auto sizes = batch_sizes(run.budget);
    auto batches = run_work_items<double>(
        run.seed, 0, sizes.size(), run.threads, [&](std::size_t b, RngStream& rng) {
            double sum = 0.0;
            std::vector<LocalTimeField> fields(1);
            for (std::uint64_t i = 0; i < sizes[b]; ++i) {
                fields[0] = local_time_field(simulate_exit_walk(level, 0, rng));
                sum += mutual_ilt(fields, std::span<const double>(&q, 1));
            }
            return sum;
        });
    double total = 0.0;
    for (double s : batches) total += s;
    const double mean = total / double(run.budget);
    if (!(mean > 0.0)) throw std::runtime_error("estimate_cq: degenerate mean");
    return 1.0 / mean;
}

SelfIltBound self_ilt_strategy_bound(double q, int n, int fine_offset,
                                     const McRun& run) {
    if (!(q >= 1.0)) throw std::invalid_argument("self_ilt_strategy_bound: q >= 1");
    if (n < 1 || fine_offset < 1)
        throw std::invalid_argument("self_ilt_strategy_bound: n, fine_offset >= 1");

    SelfIltBound out;
    out.log_event_prob = std::ldexp(1.0, n) * std::log(0.5);

    McRun cq_run = run;
    cq_run.seed = RngStream::derive_seed(run.seed, 0xc0);
    cq_run.budget = std::max<std::uint64_t>(run.budget / 4, 2000);
    out.c_q = estimate_cq(q, fine_offset, cq_run);

    // Conditioned on the straight run, each coarse step is an independent
    // up-segment avoiding the site below; its local time comes from the
    // h-transformed fine walk.
    const int fine_level = n + fine_offset;
    const int seg = 1 << fine_offset;
    const std::int64_t n_segments = std::int64_t(1) << n;
    const double y_scale =
        out.c_q * std::pow(std::ldexp(1.0, n), 1.0 + q); // C(q) 2^{n(1+q)}
    const double lln_threshold = 2.0;

    const auto sizes = batch_sizes(run.budget);
    auto batches = run_work_items<std::uint64_t>(
        run.seed, 0, sizes.size(), run.threads, [&](std::size_t b, RngStream& rng) {
            std::uint64_t hits = 0;
            for (std::uint64_t i = 0; i < sizes[b]; ++i) {
                double y_sum = 0.0;
                for (std::int64_t j = 0; j < n_segments; ++j) {
                    const EmbeddedWalk w =
                        simulate_conditioned_segment(fine_level, 0, seg, -seg, rng);
                    const LocalTimeField f = local_time_field(w);
                    double ilt = 0.0;
                    for (double v : f.values)
                        if (v > 0.0) ilt += pow_q(v, q);
                    ilt *= f.spacing();
                    y_sum += y_scale * ilt;
                }
                if (y_sum * std::ldexp(1.0, -n) <= lln_threshold) ++hits;
            }
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto h : batches) hits += h;
    out.lln_conditional = wilson_interval(hits, run.budget);
    return out;
}

TwoPhaseResult two_phase_lower_bound(const IltFunctional& functional,
                                     const TwoPhaseConfig& config,
                                     const McRun& run) {
    functional.validate();
    if (functional.m < 2)
        throw std::invalid_argument("two_phase_lower_bound: needs m >= 2 motions");
    if (!(config.epsilon > 0.0 && config.epsilon < 1.0))
        throw std::invalid_argument("two_phase_lower_bound: epsilon in (0,1)");

    const double q = functional.q_total();
    const double radius_pos = std::pow(config.epsilon, 1.0 / (1.0 + q));
    int radius = config.phase_radius > 0
                     ? config.phase_radius
                     : int(std::lround(radius_pos * std::ldexp(1.0, config.level)));
    radius = std::max(radius, 2);
    if (radius >= (1 << config.level))
        throw std::invalid_argument("two_phase_lower_bound: radius reaches the boundary");
    const double x_threshold = config.theta * config.epsilon;
    const int half = radius / 2;

    const auto sizes = batch_sizes(run.budget);
    auto batches = run_work_items<std::uint64_t>(
        run.seed, 0, sizes.size(), run.threads, [&](std::size_t b, RngStream& rng) {
            std::uint64_t hits = 0;
            std::vector<LocalTimeField> fields;
            BitSource bits(rng);
            for (std::uint64_t i = 0; i < sizes[b]; ++i) {
                fields.clear();
                bool ok = true;
                for (int j = 0; j < functional.m; ++j) {
                    // Upward orientation for the first motion, downward for
                    // the rest; phase one must exit on the assigned side
                    // without touching the opposite halfway barrier.
                    const int sign = j == 0 ? 1 : -1;
                    EmbeddedWalk w;
                    w.level = config.level;
                    w.site_min = -radius;
                    w.visits.assign(std::size_t(2 * radius + 1), 0);
                    int site = 0;
                    ++w.visits[std::size_t(radius)];
                    std::int64_t steps = 0;
                    bool crossed_half = false;
                    while (std::abs(site) != radius) {
                        site += bits.next() ? 1 : -1;
                        ++steps;
                        ++w.visits[std::size_t(site + radius)];
                        if (sign * site <= -half) crossed_half = true;
                    }
                    w.n_steps = steps;
                    if (site != sign * radius || crossed_half) {
                        ok = false;
                        break;
                    }
                    fields.push_back(local_time_field(w));
                }
                if (ok && mutual_ilt(fields, functional.q) < x_threshold) ++hits;
            }
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto h : batches) hits += h;

    TwoPhaseResult out;
    out.delta = wilson_interval(hits, run.budget);
    out.phase_radius = radius;
    out.bound = out.delta.p_hat * std::pow(0.5, double(functional.m)) *
                std::pow(config.epsilon, 2.0 / (1.0 + q));
    return out;
}

} // namespace lowtail
