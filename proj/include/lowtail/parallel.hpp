#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "lowtail/rng.hpp"

namespace lowtail {

/// Fixed number of samples handed to one work item. Work items map to
/// stream ids, not workers, so results are identical for any thread count.
inline constexpr std::uint64_t kBatchSize = 512;

/// Runs `fn(item_index, rng)` for every item on up to `threads` workers and
/// returns the results in item order. Each item draws from its own stream
/// (stream_id = stream_base + item), which makes the output independent of
/// scheduling.
template <typename Result, typename Fn>
std::vector<Result> run_work_items(std::uint64_t seed, std::uint64_t stream_base,
                                   std::size_t n_items, int threads, Fn&& fn) {
    std::vector<Result> results(n_items);
    if (n_items == 0) return results;
    threads = std::max(1, threads);
    const int n_workers =
        int(std::min<std::size_t>(std::size_t(threads), n_items));

    if (n_workers == 1) {
        for (std::size_t i = 0; i < n_items; ++i) {
            RngStream rng(seed, stream_base + i);
            results[i] = fn(i, rng);
        }
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(n_workers));
    for (int w = 0; w < n_workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_items) return;
                RngStream rng(seed, stream_base + i);
                results[i] = fn(i, rng);
            }
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

/// Splits `total` samples into kBatchSize batches; the last one is short.
inline std::vector<std::uint64_t> batch_sizes(std::uint64_t total) {
    std::vector<std::uint64_t> sizes;
    sizes.reserve(std::size_t((total + kBatchSize - 1) / kBatchSize));
    while (total > 0) {
        const std::uint64_t b = std::min(total, kBatchSize);
        sizes.push_back(b);
        total -= b;
    }
    return sizes;
}

} // namespace lowtail
