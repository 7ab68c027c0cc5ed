#pragma once

#include <cstdint>
#include <string>

namespace lowtail {

/// Fixed formatting for CSV payloads so reruns are byte-comparable.
std::string format_double(double v);

/// FNV-1a over the canonical config text, reported as 16 hex digits.
std::string config_hash(const std::string& canonical_text);

/// Trailing metadata comment every CSV artifact carries.
std::string csv_footer(const std::string& canonical_config, std::uint64_t seed);

} // namespace lowtail
