#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "lowtail/errors.hpp"
#include "lowtail/galton_watson.hpp"

namespace lowtail {

// ---------------------------------------------------------------------------
// DensityGrid
// ---------------------------------------------------------------------------

DensityGrid::DensityGrid(const GridSpec& spec) : spec_(spec) {
    if (!(spec.floor > 0.0 && spec.x_switch > spec.floor && spec.x_max > spec.x_switch))
        throw std::invalid_argument("GridSpec: need 0 < floor < x_switch < x_max");
    if (spec.geo_bins < 1 || spec.lin_bins < 1)
        throw std::invalid_argument("GridSpec: need at least one bin per section");

    const std::size_t n_edges = std::size_t(spec.geo_bins) + std::size_t(spec.lin_bins) + 2;
    edges_.resize(n_edges);
    edges_[0] = 0.0;
    const double log_ratio = std::log(spec.x_switch / spec.floor) / double(spec.geo_bins);
    for (int i = 0; i <= spec.geo_bins; ++i)
        edges_[std::size_t(1 + i)] = spec.floor * std::exp(log_ratio * double(i));
    edges_[std::size_t(1 + spec.geo_bins)] = spec.x_switch;
    const double lin_width = (spec.x_max - spec.x_switch) / double(spec.lin_bins);
    for (int j = 1; j <= spec.lin_bins; ++j)
        edges_[std::size_t(1 + spec.geo_bins + j)] = spec.x_switch + lin_width * double(j);
    edges_.back() = spec.x_max;

    masses_.assign(n_edges - 1, 0.0);
    moments_.assign(n_edges - 1, 0.0);
    inv_log_ratio_ = 1.0 / log_ratio;
    inv_lin_width_ = 1.0 / lin_width;
}

std::size_t DensityGrid::bin_index(double x) const noexcept {
    const std::size_t last = masses_.size() - 1;
    if (x < spec_.floor) return 0;
    if (x >= spec_.x_max) return last;
    std::size_t i;
    if (x < spec_.x_switch) {
        i = 1 + std::size_t(std::max(0.0, std::log(x / spec_.floor) * inv_log_ratio_));
    } else {
        i = std::size_t(1 + spec_.geo_bins) +
            std::size_t((x - spec_.x_switch) * inv_lin_width_);
    }
    if (i > last) i = last;
    while (i > 0 && x < edges_[i]) --i;
    while (i < last && x >= edges_[i + 1]) ++i;
    return i;
}

double DensityGrid::centroid(std::size_t i) const noexcept {
    if (masses_[i] > 0.0) return moments_[i] / masses_[i];
    return 0.5 * (edges_[i] + edges_[i + 1]);
}

void DensityGrid::add_atom(double x, double mass) {
    if (!(mass > 0.0)) return;
    if (x > spec_.x_max) {
        overflow_mass_ += mass;
        x = spec_.x_max;
    }
    // Linear split between the two bins whose centres straddle x. A
    // nearest-bin deposit flips discontinuously when an atom sits on an
    // edge, which feeds a small limit cycle through the fixed-point
    // iteration; the crossfade keeps deposits continuous in position.
    const std::size_t i = bin_index(x);
    const std::size_t last = masses_.size() - 1;
    const double center = 0.5 * (edges_[i] + edges_[i + 1]);
    std::size_t other = i;
    double frac = 0.0;
    if (x >= center && i < last) {
        other = i + 1;
        const double next_center = 0.5 * (edges_[i + 1] + edges_[i + 2]);
        frac = (x - center) / (next_center - center);
    } else if (x < center && i > 0) {
        other = i - 1;
        const double prev_center = 0.5 * (edges_[i - 1] + edges_[i]);
        frac = (center - x) / (center - prev_center);
    }
    const double m_other = mass * frac;
    const double m_main = mass - m_other;
    masses_[i] += m_main;
    moments_[i] += m_main * x;
    if (m_other > 0.0) {
        masses_[other] += m_other;
        moments_[other] += m_other * x;
    }
}

void DensityGrid::normalise() {
    double total = 0.0;
    for (double m : masses_) total += m;
    if (!(total > 0.0))
        throw std::logic_error("DensityGrid::normalise: no mass");
    const double inv = 1.0 / total;
    for (auto& m : masses_) m *= inv;
    for (auto& m : moments_) m *= inv;
    overflow_mass_ *= inv;
    mean_ = 0.0;
    for (double m : moments_) mean_ += m;
}

double DensityGrid::tail_below(double epsilon) const {
    if (epsilon < spec_.floor) return 0.0; // below coverage, flagged via covers()
    double cum = 0.0;
    if (epsilon >= spec_.x_max) {
        for (double m : masses_) cum += m;
        return cum;
    }
    const std::size_t i = bin_index(epsilon);
    for (std::size_t j = 0; j < i; ++j) cum += masses_[j];
    const double lo = edges_[i];
    const double hi = edges_[i + 1];
    cum += masses_[i] * (epsilon - lo) / (hi - lo);
    return std::min(cum, 1.0);
}

void DensityGrid::write_csv(std::ostream& os) const {
    os << "bin_low,bin_high,mass\n";
    char line[128];
    for (std::size_t i = 0; i < masses_.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g\n", edges_[i],
                      edges_[i + 1], masses_[i]);
        os << line;
    }
}

// ---------------------------------------------------------------------------
// Fixed-point solver internals
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kBodyNodes = 32768;
constexpr double kDropEps = 1e-26; // per-source neglected-mass bound in pair sums

struct Atom {
    double x;
    double m;
};

// Mixture weights w_k = p_k for k = 1..K; geometric laws are truncated where
// the tail mass drops below 1e-14 and renormalised.
struct MixtureWeights {
    std::vector<double> w; // index k
    double mean = 0.0;
};

MixtureWeights mixture_weights(const OffspringDistribution& dist) {
    MixtureWeights mw;
    if (dist.is_geometric()) {
        const double a = dist.geo_param();
        const int K = std::max(2, int(std::ceil(std::log(1e-14) / std::log(a))));
        mw.w.assign(std::size_t(K) + 1, 0.0);
        double tail = 1.0 - std::pow(a, double(K));
        for (int k = 1; k <= K; ++k)
            mw.w[std::size_t(k)] = (1.0 - a) * std::pow(a, double(k) - 1.0) / tail;
    } else {
        mw.w = dist.pmf();
    }
    for (std::size_t k = 1; k < mw.w.size(); ++k) mw.w[k] = std::max(0.0, mw.w[k]);
    for (std::size_t k = 1; k < mw.w.size(); ++k) mw.mean += double(k) * mw.w[k];
    return mw;
}

// Uniform-node body representation convolved in the spectral domain:
// mixture spectrum = sum_k w_k F^k (Horner over incremental powers). Mass
// that would exceed the periodic window is negligible for laws with
// exponential right tails; the overflow monitor guards drift.
class SpectralConvolver {
public:
    explicit SpectralConvolver(std::size_t n) : n_(n) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        real_ = fftw_alloc_real(n_);
        spec_ = fftw_alloc_complex(n_ / 2 + 1);
        fwd_ = fftw_plan_dft_r2c_1d(int(n_), real_, spec_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_1d(int(n_), spec_, real_, FFTW_ESTIMATE);
        if (!real_ || !spec_ || !fwd_ || !inv_)
            throw std::runtime_error("SpectralConvolver: fftw setup failed");
    }

    ~SpectralConvolver() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    SpectralConvolver(const SpectralConvolver&) = delete;
    SpectralConvolver& operator=(const SpectralConvolver&) = delete;

    void mixture(const std::vector<double>& body, const std::vector<double>& w,
                 std::vector<double>& out) {
        const std::size_t nc = n_ / 2 + 1;
        std::memcpy(real_, body.data(), n_ * sizeof(double));
        fftw_execute(fwd_);

        std::vector<std::complex<double>> base(nc), cur(nc), acc(nc, {0.0, 0.0});
        for (std::size_t i = 0; i < nc; ++i)
            base[i] = {spec_[i][0], spec_[i][1]};
        cur = base;
        for (std::size_t k = 1; k < w.size(); ++k) {
            if (k > 1)
                for (std::size_t i = 0; i < nc; ++i) cur[i] *= base[i];
            if (w[k] != 0.0)
                for (std::size_t i = 0; i < nc; ++i) acc[i] += w[k] * cur[i];
        }
        for (std::size_t i = 0; i < nc; ++i) {
            spec_[i][0] = acc[i].real();
            spec_[i][1] = acc[i].imag();
        }
        fftw_execute(inv_);
        out.resize(n_);
        const double scale = 1.0 / double(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = std::max(0.0, real_[i] * scale);
    }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    std::size_t n_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

// Refined accumulator for the multiplicative left tail: the DensityGrid bin
// layout scaled so it covers sums up to mu * x_switch, with per-bin mass and
// first moment.
struct ScratchGrid {
    std::vector<double> edges;
    std::vector<double> mass;
    std::vector<double> mom;

    ScratchGrid(const DensityGrid& grid, double scale) {
        const auto& src = grid.edges();
        const std::size_t n_tail_edges = std::size_t(2 + grid.spec().geo_bins);
        edges.assign(src.begin(), src.begin() + long(n_tail_edges));
        for (auto& e : edges) e *= scale;
        mass.assign(edges.size() - 1, 0.0);
        mom.assign(edges.size() - 1, 0.0);
    }

    void clear() {
        std::fill(mass.begin(), mass.end(), 0.0);
        std::fill(mom.begin(), mom.end(), 0.0);
    }

    void atoms(std::vector<Atom>& out) const {
        out.clear();
        for (std::size_t i = 0; i < mass.size(); ++i)
            if (mass[i] > 0.0) out.push_back({mom[i] / mass[i], mass[i]});
    }
};

// out += A (*) f restricted to sums <= cut. Atom lists are position-sorted,
// so both the inner limit and the target bin advance monotonically.
void conv_restricted(const std::vector<Atom>& A, const std::vector<Atom>& f,
                     const std::vector<double>& suffix, double cut,
                     ScratchGrid& out, std::uint64_t& pair_ops) {
    out.clear();
    if (A.empty() || f.empty()) return;
    const auto& edges = out.edges;
    const std::size_t last_bin = out.mass.size() - 1;
    std::size_t limit = f.size();
    std::size_t t0 = 0;

    for (const Atom& a : A) {
        while (limit > 0 && a.x + f[limit - 1].x > cut) --limit;
        if (limit == 0) break; // positions ascend, later sources only overshoot
        if (a.m * suffix[0] < kDropEps) continue;

        const double s0 = a.x + f[0].x;
        while (t0 < last_bin && s0 >= edges[t0 + 1]) ++t0;
        std::size_t t = t0;
        std::size_t j = 0;
        for (; j < limit; ++j) {
            if (a.m * suffix[j] < kDropEps) break;
            const double s = a.x + f[j].x;
            while (t < last_bin && s >= edges[t + 1]) ++t;
            const double m = a.m * f[j].m;
            out.mass[t] += m;
            out.mom[t] += m * s;
        }
        pair_ops += j;
    }
}

void cic_deposit(std::vector<double>& body, double inv_h, double x, double m) {
    const double u = x * inv_h;
    const std::size_t j = std::size_t(u);
    const double hi = u - double(j);
    body[j] += m * (1.0 - hi);
    body[j + 1] += m * hi;
}

} // namespace

DensityGrid density_fixed_point(const OffspringDistribution& dist,
                                const GridSpec& spec, int iterations) {
    if (dist.p0() > 0.0)
        throw DegenerateDistributionError(
            "density_fixed_point: p0 > 0, prune the distribution first");
    if (iterations < 0)
        throw std::invalid_argument("density_fixed_point: iterations must be >= 0");

    const MixtureWeights mix = mixture_weights(dist);
    const double mu = mix.mean;

    DensityGrid grid(spec);
    grid.add_atom(1.0, 1.0);
    grid.normalise();

    const double body_extent = 1.02 * mu * spec.x_max;
    const double h = body_extent / double(kBodyNodes);
    const double inv_h = 1.0 / h;
    SpectralConvolver fft(kBodyNodes);

    ScratchGrid scratch(grid, mu), step(grid, mu);
    const double scratch_top = scratch.edges.back();

    std::vector<double> body(kBodyNodes), mixture_body;
    std::vector<Atom> f_tail, t_prev, t_next, deposits;
    std::vector<double> suffix;
    std::uint64_t pair_ops = 0;

    for (int it = 0; it < iterations; ++it) {
        const double cut = std::min(mu * grid.mean() * spec.x_switch, scratch_top);

        // Body: every bin enters as a centroid atom on the uniform nodes.
        std::fill(body.begin(), body.end(), 0.0);
        for (std::size_t i = 0; i < grid.n_bins(); ++i)
            if (grid.masses()[i] > 0.0)
                cic_deposit(body, inv_h, grid.centroid(i), grid.masses()[i]);
        fft.mixture(body, mix.w, mixture_body);

        // Left tail: exact pair convolutions of the atoms below the cut.
        f_tail.clear();
        for (std::size_t i = 0; i < grid.n_bins(); ++i) {
            if (grid.masses()[i] <= 0.0) continue;
            const double c = grid.centroid(i);
            if (c < cut) f_tail.push_back({c, grid.masses()[i]});
        }
        suffix.assign(f_tail.size() + 1, 0.0);
        for (std::size_t i = f_tail.size(); i-- > 0;)
            suffix[i] = suffix[i + 1] + f_tail[i].m;

        deposits.clear();
        const std::size_t K = mix.w.size() - 1;
        if (K >= 1 && mix.w[1] > 0.0)
            for (const Atom& a : f_tail) deposits.push_back({a.x, mix.w[1] * a.m});

        t_prev = f_tail;
        for (std::size_t k = 2; k <= K && !t_prev.empty(); ++k) {
            conv_restricted(t_prev, f_tail, suffix, cut, step, pair_ops);
            if (pair_ops > spec.max_pair_ops)
                throw ResourceLimitError(
                    "density_fixed_point: tail convolution budget exceeded");
            step.atoms(t_next);
            std::swap(t_prev, t_next);
            if (t_prev.empty()) break;
            if (mix.w[k] > 0.0) {
                double mass_k = 0.0;
                for (const Atom& a : t_prev) {
                    deposits.push_back({a.x, mix.w[k] * a.m});
                    mass_k += a.m;
                }
                // Geometric mixtures fade fast below the cut; stop once the
                // remaining terms cannot matter.
                if (dist.is_geometric() && mix.w[k] * mass_k < 1e-22) break;
            }
        }

        // Rescale factor from the exact first moment of the deposit
        // configuration, so the renormalised law has mean 1 to rounding.
        double dep_mass = 0.0, dep_moment = 0.0;
        for (const Atom& a : deposits) {
            dep_mass += a.m;
            dep_moment += a.m * a.x;
        }
        for (std::size_t j = 0; j < kBodyNodes; ++j) {
            const double x = double(j) * h;
            if (x > cut && mixture_body[j] > 0.0) {
                dep_mass += mixture_body[j];
                dep_moment += mixture_body[j] * x;
            }
        }
        const double kappa = dep_moment / dep_mass;

        // Re-bin at 1/kappa, refined tail below the cut, spectral body above.
        DensityGrid next(spec);
        const double inv_kappa = 1.0 / kappa;
        for (const Atom& a : deposits) next.add_atom(a.x * inv_kappa, a.m);
        for (std::size_t j = 0; j < kBodyNodes; ++j) {
            const double x = double(j) * h;
            if (x > cut && mixture_body[j] > 0.0)
                next.add_atom(x * inv_kappa, mixture_body[j]);
        }
        next.normalise();

        double tv = 0.0;
        for (std::size_t i = 0; i < grid.n_bins(); ++i)
            tv += std::abs(next.masses()[i] - grid.masses()[i]);
        tv *= 0.5;
        next.set_convergence(tv, tv <= 1e-6);
        grid = std::move(next);
    }
    return grid;
}

} // namespace lowtail
