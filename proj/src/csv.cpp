#include "lowtail/csv.hpp"

#include <cstdio>
#include <ostream>

#include "lowtail/tail_estimate.hpp"

namespace lowtail {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string config_hash(const std::string& canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string csv_footer(const std::string& canonical_config, std::uint64_t seed) {
    return "# config_hash=" + config_hash(canonical_config) +
           " seed=" + std::to_string(seed) + "\n";
}

std::string to_string(TailMethod m) {
    switch (m) {
        case TailMethod::mc: return "mc";
        case TailMethod::density: return "density";
        case TailMethod::bound_lower: return "bound_lower";
        case TailMethod::bound_upper: return "bound_upper";
    }
    return "unknown";
}

std::vector<TailPoint> TailEstimate::measured() const {
    std::vector<TailPoint> out;
    for (const auto& pt : points)
        if (pt.method == TailMethod::mc || pt.method == TailMethod::density)
            out.push_back(pt);
    return out;
}

void TailEstimate::write_csv(std::ostream& os, const std::string& extra_header,
                             const std::string& extra_values) const {
    os << "epsilon,p_hat,ci_low,ci_high,method";
    if (!extra_header.empty()) os << ',' << extra_header;
    os << '\n';
    for (const auto& pt : points) {
        os << format_double(pt.epsilon) << ',' << format_double(pt.p) << ','
           << format_double(pt.ci_low) << ',' << format_double(pt.ci_high) << ','
           << to_string(pt.method);
        if (!extra_values.empty()) os << ',' << extra_values;
        os << '\n';
    }
    os << "# fit: slope=" << format_double(fit.slope)
       << " slope_stderr=" << format_double(fit.slope_stderr)
       << " target_exponent=" << format_double(target_exponent)
       << " r_squared=" << format_double(fit.r_squared)
       << " dropped_points=" << dropped_points << '\n';
}

} // namespace lowtail
