#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lowtail/offspring.hpp"
#include "lowtail/rng.hpp"

namespace lowtail {

/// Generation sizes Z_0..Z_n of one realisation (Z_0 = 1).
struct GenerationTrace {
    std::vector<std::uint64_t> sizes;
};

inline constexpr std::uint64_t kDefaultGenerationCap = 1'000'000'000ull;

/// Exact simulation of the generation sizes: Z_{k+1} is distributed as a sum
/// of Z_k independent offspring draws (sampled via multinomial counts for a
/// finite pmf and via the gamma-Poisson mixture for geometric laws, both
/// equal in law to the one-by-one sum). Requires p0 = 0. Throws
/// ResourceLimitError when a generation exceeds `cap`.
GenerationTrace simulate_generations(const OffspringDistribution& dist, int n,
                                     RngStream& rng,
                                     std::uint64_t cap = kDefaultGenerationCap);

/// One draw of W_n = Z_n / mu^n, the depth-n truncation of the martingale
/// limit.
double sample_W(const OffspringDistribution& dist, int depth, RngStream& rng,
                std::uint64_t cap = kDefaultGenerationCap);

/// Draw of W_n conditioned on minimal growth Z_j = nu^j for all j <= k
/// (every individual in the first k generations has exactly nu children),
/// evolving freely afterwards. Stretched-exponential regime only.
double sample_W_conditioned_minimal(const OffspringDistribution& dist,
                                    int condition_depth, int total_depth,
                                    RngStream& rng,
                                    std::uint64_t cap = kDefaultGenerationCap);

/// log P{Z_j = nu^j for all j <= k} = [(nu^k - 1)/(nu - 1)] log p_nu.
double minimal_conditioning_log_prob(const BranchingParams& params, int k);

/// Grid layout for the discretized law of W: an underflow bin [0, floor),
/// geometric bins on [floor, x_switch) and linear bins on [x_switch, x_max].
/// The geometric part resolves the left tail over many decades; the linear
/// part gives the body uniform resolution for convolution.
struct GridSpec {
    double floor = 1e-8;
    double x_switch = 0.5;
    double x_max = 50.0;
    int geo_bins = 4096;
    int lin_bins = 4096;
    /// Abort knob for the left-tail pair convolutions.
    std::uint64_t max_pair_ops = 20'000'000'000ull;
};

/// Discretized distribution on the hybrid grid. Alongside the bin masses the
/// first moments are tracked, so the mean is exact and every bin knows its
/// mass centroid (used as the atom position in convolutions).
class DensityGrid {
public:
    DensityGrid() = default;
    explicit DensityGrid(const GridSpec& spec);

    std::size_t n_bins() const noexcept { return masses_.size(); }
    const std::vector<double>& edges() const noexcept { return edges_; }
    const std::vector<double>& masses() const noexcept { return masses_; }
    const std::vector<double>& moments() const noexcept { return moments_; }
    double mean() const noexcept { return mean_; }
    double overflow_mass() const noexcept { return overflow_mass_; }
    bool converged() const noexcept { return converged_; }
    double last_tv() const noexcept { return last_tv_; }
    const GridSpec& spec() const noexcept { return spec_; }

    std::size_t bin_index(double x) const noexcept;
    /// Mass centroid of bin i (bin midpoint when the bin is empty).
    double centroid(std::size_t i) const noexcept;

    void add_atom(double x, double mass);
    /// Scales masses to total 1 and refreshes the stored mean.
    void normalise();

    bool covers(double epsilon) const noexcept {
        return epsilon >= spec_.floor && epsilon <= spec_.x_max;
    }

    /// P{W < eps}: full bins below eps plus a linear fraction of the
    /// straddling bin. Below the grid floor the value is reported as 0
    /// (flagged via covers()); at or above x_max the total mass is returned.
    double tail_below(double epsilon) const;

    /// CSV rows `bin_low, bin_high, mass`.
    void write_csv(std::ostream& os) const;

    // solver bookkeeping
    void set_convergence(double tv, bool ok) { last_tv_ = tv; converged_ = ok; }
    void add_overflow(double m) { overflow_mass_ += m; }

private:
    GridSpec spec_;
    std::vector<double> edges_;
    std::vector<double> masses_;
    std::vector<double> moments_;
    double mean_ = 0.0;
    double overflow_mass_ = 0.0;
    double last_tv_ = 0.0;
    bool converged_ = true;
    double inv_log_ratio_ = 0.0;
    double inv_lin_width_ = 0.0;
};

/// Iterates the smoothing transform W <- mu^{-1} sum_{i<=N} W_i on the
/// discretized law, starting from a point mass at 1 (so iteration k holds
/// the law of W_k). Each step forms the p_k-mixture of k-fold convolutions,
/// rescales the axis so the mean returns to exactly 1, and re-bins with
/// mass- and moment-preserving deposits.
DensityGrid density_fixed_point(const OffspringDistribution& dist,
                                const GridSpec& spec, int iterations);

} // namespace lowtail
