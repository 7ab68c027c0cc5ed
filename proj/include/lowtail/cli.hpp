#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace lowtail::cli {

/// Parses the line-based `key = value` config format (# comments). Every
/// offending line is reported, not just the first. Returns the key-value
/// map; `errors` is left empty on success.
std::map<std::string, std::string> parse_config_text(
    const std::string& text, const std::set<std::string>& allowed_keys,
    std::vector<std::string>& errors);

/// Experiment runner. Exit codes: 0 success, 2 invalid flags/config,
/// 3 degenerate distribution, 4 resource limit, 1 internal error.
int run(int argc, const char* const* argv);

} // namespace lowtail::cli
