#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lowtail {

/// Two-sided 95% normal quantile used for the default confidence level.
inline constexpr double kZ95 = 1.959963985;

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9). Used for non-default confidence levels.
double inverse_normal_cdf(double p);

struct BernoulliEstimate {
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double confidence = 0.95;
};

/// Wilson score interval. Degenerate counts (0 or trials) still produce a
/// nonzero-width interval.
BernoulliEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                  double confidence = 0.95);

/// Pools two estimates at the same confidence level (adds successes and
/// trials, recomputes the interval). Associative and commutative.
BernoulliEstimate merge(const BernoulliEstimate& a, const BernoulliEstimate& b);

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

struct FitPoint {
    double epsilon;
    double prob;
};

/// Least squares of log(prob) against log(epsilon); the slope estimates the
/// polynomial tail exponent. Optional weights (one per point, e.g.
/// 1/ci_width^2); empty means unweighted.
RegressionFit fit_power_law(std::span<const FitPoint> points,
                            std::span<const double> weights = {});

/// Least squares of log(-log prob) against log(epsilon); the slope estimates
/// the negated stretched-exponential exponent. Requires prob < 1/e so the
/// outer log is stable.
RegressionFit fit_stretched_exponent(std::span<const FitPoint> points,
                                     std::span<const double> weights = {});

/// Two-sample Kolmogorov-Smirnov statistic (sup distance of empirical CDFs).
/// Inputs must be sorted ascending.
double ks_statistic(std::span<const double> sample_a,
                    std::span<const double> sample_b);

} // namespace lowtail
