#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lowtail {

enum class Regime { schroeder, boettcher };

/// Offspring law of a branching process. Either a finite pmf p_0..p_K or a
/// parametric geometric law p_k = (1-a) a^{k-1} for k >= 1 (which keeps its
/// closed forms instead of being truncated).
class OffspringDistribution {
public:
    static OffspringDistribution from_pmf(std::vector<double> probs);
    static OffspringDistribution geometric(double a);

    /// Parses the text format "pmf: 0:0.25, 2:0.75" or "geometric: 0.5"
    /// (whitespace-insensitive, keys are support points).
    static OffspringDistribution parse(std::string_view text);
    std::string to_text() const;

    bool is_geometric() const noexcept { return geometric_; }
    double geo_param() const;
    /// Finite-pmf coefficients (p_0 first). Throws for geometric laws.
    const std::vector<double>& pmf() const;

    double prob(std::size_t k) const noexcept;
    double mean() const noexcept { return mean_; }
    double p0() const noexcept { return prob(0); }
    double p1() const noexcept { return prob(1); }
    /// Smallest support point with nonzero probability.
    int min_support() const noexcept { return nu_; }
    /// Largest support point (finite pmf only; throws for geometric).
    int max_support() const;
    bool is_point_mass() const noexcept;

    /// Probability generating function f(s) = sum p_k s^k, s in [0,1].
    double pgf(double s) const;

private:
    OffspringDistribution() = default;

    bool geometric_ = false;
    double geo_a_ = 0.0;
    std::vector<double> probs_; // finite pmf case
    double mean_ = 0.0;
    int nu_ = 0;
};

/// Tail-exponent parameters derived from an offspring law with p0 = 0.
struct BranchingParams {
    double mu = 0.0;       // mean offspring, > 1
    double p1 = 0.0;       // probability of exactly one child
    int nu = 0;            // minimal support point
    double p_nu = 0.0;     // probability of the minimal offspring count
    Regime regime = Regime::schroeder;
    double tau = 0.0;        // -log p1 / log mu (polynomial regime)
    double beta = 0.0;       // log nu / log mu (stretched regime)
    double beta_ratio = 0.0; // beta / (1 - beta)
};

/// Computes the branching parameters. Requires p0 = 0 (prune first), mean
/// above one, and a nondegenerate law; rejects nu = mu (deterministic tree,
/// the martingale limit is a constant).
BranchingParams derive_params(const OffspringDistribution& dist);

/// Smallest fixed point of the generating function in [0,1), by iterating
/// s <- f(s) from 0 to absolute tolerance 1e-13 (cap 1e6 iterations).
double extinction_probability(const OffspringDistribution& dist);

/// Offspring law of the reduced tree of surviving lines, via
/// fhat(s) = [f(q + (1-q)s) - q] / (1-q) with q the extinction probability.
/// The result has p0 = 0 and the same mean.
OffspringDistribution prune(const OffspringDistribution& dist);

} // namespace lowtail
