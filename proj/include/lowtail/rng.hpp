#pragma once

#include <cstdint>
#include <limits>

namespace lowtail {

namespace detail {
// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}
} // namespace detail

/// Counter-based 64-bit generator: a SplitMix64 finalizer applied to an
/// affine counter. The seed fixes the starting counter and the stream id
/// selects the (odd) increment, so every (seed, stream_id) pair yields a
/// reproducible stream and distinct stream ids give statistically
/// independent streams without coordination. Satisfies
/// UniformRandomBitGenerator, so <random> distributions can draw from it.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : state_(detail::mix64(seed ^ 0x5851F42D4C957F2Dull) +
                 detail::mix64(stream_id)),
          inc_((detail::mix64(stream_id ^ 0xDA3E39CB94B95BDBull) << 1) | 1u),
          seed_(seed),
          stream_id_(stream_id) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        state_ += inc_;
        return detail::mix64(state_);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() noexcept { return double((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Derives a decorrelated seed for a sub-experiment, so nested phases
    /// of one run never reuse stream ids of the parent phase.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
        return detail::mix64(seed ^ detail::mix64(tag + 0x9E3779B97F4A7C15ull));
    }

private:
    std::uint64_t state_;
    std::uint64_t inc_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

/// Serves single random bits from 64-bit words; used by the walk
/// simulators where one draw per step would dominate the runtime.
class BitSource {
public:
    explicit BitSource(RngStream& rng) noexcept : rng_(rng) {}

    bool next() noexcept {
        if (left_ == 0) {
            bits_ = rng_();
            left_ = 64;
        }
        bool b = bits_ & 1u;
        bits_ >>= 1;
        --left_;
        return b;
    }

private:
    RngStream& rng_;
    std::uint64_t bits_ = 0;
    int left_ = 0;
};

} // namespace lowtail
