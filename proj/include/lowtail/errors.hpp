#pragma once

#include <stdexcept>
#include <string>

namespace lowtail {

// Offspring law unusable for tail experiments: point mass, mean <= 1,
// or p0 > 0 where the reduced (pruned) law is required.
struct DegenerateDistributionError : std::domain_error {
    using std::domain_error::domain_error;
};

// Operation called in the wrong branching regime.
struct InvalidRegimeError : std::domain_error {
    using std::domain_error::domain_error;
};

// A configurable cap (generation size, step count, convolution work)
// was exceeded; callers should reduce depth, level or budget.
struct ResourceLimitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LevelMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// No tau in the search grid makes the exponential moment drop below one.
struct NoFeasibleTauError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lowtail
