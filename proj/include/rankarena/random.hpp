#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace rankarena {

using Engine = std::mt19937_64;

/// Named sub-streams so that independent stages never share random numbers
/// even when they are driven by the same user seed.
enum class Stream : std::uint64_t {
    returns = 1,
    opponents = 2,
    focal = 3,
    bootstrap = 4,
    kernel = 5,
    msm = 6,
    observed = 7,
    resample = 8,
    level = 9,
};

/// Engine for replication `index` of `stream`. Depends only on its arguments,
/// so replications can run in any order or in parallel.
inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return Engine(seq);
}

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t index, std::uint64_t sub) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32), static_cast<std::uint32_t>(sub),
                      static_cast<std::uint32_t>(sub >> 32)};
    return Engine(seq);
}

/// Shuffles the first `count` slots of `items` uniformly (partial Fisher-Yates).
/// After the call items[0..count) is a uniform sample without replacement.
template <class T>
void partial_shuffle(std::span<T> items, std::size_t count, Engine& rng) {
    const std::size_t n = items.size();
    count = std::min(count, n == 0 ? 0 : n - 1);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(items[i], items[pick(rng)]);
    }
}

inline int worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, n) over a pool of threads. The body must only
/// write to slots indexed by i; reductions happen afterwards in index order,
/// which keeps results independent of the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body, int threads = worker_count()) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(threads))
                        body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace rankarena
