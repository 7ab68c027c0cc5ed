#pragma once

// Test-only reference computations, kept independent of the library
// implementation paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracles {

inline double exp1_cdf(double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x); }

/// One-sample KS distance of a sorted sample against an analytic CDF.
template <typename Cdf>
double ks_against_cdf(std::span<const double> sorted, Cdf cdf) {
    const double n = double(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, std::max(f - double(i) / n, double(i + 1) / n - f));
    }
    return d;
}

/// Expected exit step count of the simple random walk from `start` on
/// {-m..m}, by solving u(x) = 1 + (u(x-1) + u(x+1))/2 with absorbing ends
/// via Gauss-Seidel sweeps (small m only).
inline double expected_exit_steps(int m, int start) {
    std::vector<double> u(std::size_t(2 * m + 1), 0.0);
    for (int sweep = 0; sweep < 200000; ++sweep) {
        double delta = 0.0;
        for (int x = -m + 1; x <= m - 1; ++x) {
            const std::size_t i = std::size_t(x + m);
            const double next = 1.0 + 0.5 * (u[i - 1] + u[i + 1]);
            delta = std::max(delta, std::abs(next - u[i]));
            u[i] = next;
        }
        if (delta < 1e-12) break;
    }
    return u[std::size_t(start + m)];
}

/// Standard normal upper tail.
inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// P{sigma < t} for the Brownian exit time from (-1,1) started at 0,
/// by the eigenfunction series (alternating, fast for t not too small).
inline double exit_time_cdf(double t) {
    if (t <= 0.0) return 0.0;
    double sum = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double lambda = (2.0 * k + 1.0) * (2.0 * k + 1.0) * M_PI * M_PI / 8.0;
        const double term = (k % 2 == 0 ? 1.0 : -1.0) / (2.0 * k + 1.0) *
                            std::exp(-lambda * t);
        sum += term;
        if (std::abs(term) < 1e-16) break;
    }
    return 1.0 - 4.0 / M_PI * sum;
}

} // namespace oracles
