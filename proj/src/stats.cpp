#include "lowtail/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lowtail {

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("inverse_normal_cdf: p must be in (0,1)");

    // Acklam 2003 rational approximation with tail branches.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {
double z_for_confidence(double confidence) {
    if (std::abs(confidence - 0.95) < 1e-12) return kZ95;
    return inverse_normal_cdf(0.5 + confidence / 2.0);
}
} // namespace

BernoulliEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                  double confidence) {
    if (trials < 1)
        throw std::invalid_argument("wilson_interval: trials must be >= 1");
    if (successes > trials)
        throw std::invalid_argument("wilson_interval: successes > trials");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("wilson_interval: confidence must be in (0,1)");

    const double z = z_for_confidence(confidence);
    const double n = double(trials);
    const double p = double(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half =
        (z / denom) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));

    BernoulliEstimate e;
    e.successes = successes;
    e.trials = trials;
    e.p_hat = p;
    e.ci_low = std::max(0.0, center - half);
    e.ci_high = std::min(1.0, center + half);
    e.confidence = confidence;
    return e;
}

BernoulliEstimate merge(const BernoulliEstimate& a, const BernoulliEstimate& b) {
    if (std::abs(a.confidence - b.confidence) > 1e-12)
        throw std::invalid_argument("merge: confidence levels differ");
    return wilson_interval(a.successes + b.successes, a.trials + b.trials,
                           a.confidence);
}

namespace {

RegressionFit weighted_least_squares(const std::vector<double>& x,
                                     const std::vector<double>& y,
                                     std::span<const double> weights) {
    const std::size_t n = x.size();
    std::vector<double> w(n, 1.0);
    if (!weights.empty()) {
        if (weights.size() != n)
            throw std::invalid_argument("fit: weights size mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(weights[i] > 0.0))
                throw std::invalid_argument("fit: weights must be positive");
            w[i] = weights[i];
        }
    }

    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xbar = sx / sw;
    const double ybar = sy / sw;

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xbar;
        const double dy = y[i] - ybar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("fit: degenerate input, all abscissae equal");

    RegressionFit f;
    f.n_points = n;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        sse += w[i] * r * r;
    }
    if (n > 2)
        f.slope_stderr = std::sqrt(std::max(0.0, sse / double(n - 2)) / sxx);
    else
        f.slope_stderr = 0.0;
    // On an exact line syy can be ~0; report a perfect fit then.
    f.r_squared = syy > 1e-300 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
    return f;
}

} // namespace

RegressionFit fit_power_law(std::span<const FitPoint> points,
                            std::span<const double> weights) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_power_law: need at least 3 points");
    std::vector<double> x, y;
    x.reserve(points.size());
    y.reserve(points.size());
    for (const auto& pt : points) {
        if (!(pt.epsilon > 0.0))
            throw std::invalid_argument("fit_power_law: epsilon must be positive");
        if (!(pt.prob > 0.0 && pt.prob < 1.0))
            throw std::invalid_argument(
                "fit_power_law: probabilities must be in (0,1)");
        x.push_back(std::log(pt.epsilon));
        y.push_back(std::log(pt.prob));
    }
    return weighted_least_squares(x, y, weights);
}

RegressionFit fit_stretched_exponent(std::span<const FitPoint> points,
                                     std::span<const double> weights) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_stretched_exponent: need at least 3 points");
    const double one_over_e = std::exp(-1.0);
    std::vector<double> x, y;
    x.reserve(points.size());
    y.reserve(points.size());
    for (const auto& pt : points) {
        if (!(pt.epsilon > 0.0))
            throw std::invalid_argument(
                "fit_stretched_exponent: epsilon must be positive");
        if (!(pt.prob > 0.0))
            throw std::invalid_argument(
                "fit_stretched_exponent: probabilities must be positive");
        if (pt.prob >= one_over_e)
            throw std::invalid_argument(
                "fit_stretched_exponent: prob >= 1/e, unstable regime");
        x.push_back(std::log(pt.epsilon));
        y.push_back(std::log(-std::log(pt.prob)));
    }
    return weighted_least_squares(x, y, weights);
}

double ks_statistic(std::span<const double> sample_a,
                    std::span<const double> sample_b) {
    if (sample_a.empty() || sample_b.empty())
        throw std::invalid_argument("ks_statistic: empty sample");
    if (!std::is_sorted(sample_a.begin(), sample_a.end()) ||
        !std::is_sorted(sample_b.begin(), sample_b.end()))
        throw std::invalid_argument("ks_statistic: samples must be sorted");

    const double na = double(sample_a.size());
    const double nb = double(sample_b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sample_a.size() && j < sample_b.size()) {
        const double t = std::min(sample_a[i], sample_b[j]);
        while (i < sample_a.size() && sample_a[i] <= t) ++i;
        while (j < sample_b.size() && sample_b[j] <= t) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    return d;
}

} // namespace lowtail
