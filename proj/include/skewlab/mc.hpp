#pragma once

// Seeded, thread-count-independent Monte Carlo plumbing. Work is split into
// fixed-size shards; shard k draws from a substream derived from the master
// seed and k alone, and partial results are merged in shard order. The same
// seed therefore produces bit-identical output for any number of threads.

#include <atomic>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace skewlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Compact 8-byte splitmix64 engine; used where one generator per sample
// would make mt19937_64's state size prohibitive.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t operator()() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// Deterministic substream for shard k of a master seed.
inline std::mt19937_64 substream(std::uint64_t master_seed, std::uint64_t shard) {
    const std::uint64_t s = splitmix64(master_seed ^ splitmix64(shard + 1));
    return std::mt19937_64(s);
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Evaluates fn(shard) for shard = 0..n_shards-1 on `threads` threads and
// returns the results indexed by shard, independent of scheduling.
template <typename T, typename Fn>
std::vector<T> run_shards(std::int64_t n_shards, int threads, Fn&& fn) {
    std::vector<T> out(static_cast<std::size_t>(n_shards));
    threads = std::min<std::int64_t>(resolve_threads(threads), n_shards);
    if (threads <= 1) {
        for (std::int64_t k = 0; k < n_shards; ++k)
            out[static_cast<std::size_t>(k)] = fn(k);
        return out;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::int64_t k = next.fetch_add(1);
                if (k >= n_shards) return;
                out[static_cast<std::size_t>(k)] = fn(k);
            }
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

struct SamplerConfig {
    std::uint64_t seed = 12345;
    std::int64_t samples = 1'000'000;
    std::int64_t shard_size = 65536;
    int threads = 1;  // 0 = hardware concurrency
};

}  // namespace skewlab
