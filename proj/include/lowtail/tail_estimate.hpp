#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lowtail/stats.hpp"

namespace lowtail {

enum class TailMethod { mc, density, bound_lower, bound_upper };

std::string to_string(TailMethod m);

struct TailPoint {
    double epsilon = 0.0;
    double p = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    TailMethod method = TailMethod::mc;
};

/// Measured lower-tail curve P{X < eps} plus the fitted exponent. Points are
/// kept with strictly decreasing epsilon; analytic bound curves ride along
/// as bound_lower / bound_upper tagged points.
struct TailEstimate {
    std::vector<TailPoint> points;
    RegressionFit fit;
    bool stretched = false;       // fit of log(-log p), otherwise log p
    double target_exponent = 0.0; // expected slope, sign included
    std::size_t dropped_points = 0; // zero/unusable probabilities left out of the fit

    /// Measured points only (mc/density), decreasing epsilon.
    std::vector<TailPoint> measured() const;

    /// CSV rows `epsilon, p_hat, ci_low, ci_high, method` (plus caller
    /// supplied extra columns) and a fit footer comment.
    void write_csv(std::ostream& os, const std::string& extra_header = "",
                   const std::string& extra_values = "") const;
};

} // namespace lowtail
