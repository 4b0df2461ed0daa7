// Shared error types, deterministic RNG streams and a small static-partition
// parallel loop used by the Monte-Carlo drivers.
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace obl {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Configuration cannot be used (overlapping obstacles, k0 < 3, bad file, ...).
struct InvalidConfiguration : Error {
    using Error::Error;
};

/// A ray or trajectory met a boundary closer to tangency than the modelled regime allows.
struct TangentHit : Error {
    using Error::Error;
};

/// Forward ray misses every obstacle; the point is not in the trapped set.
struct EscapeError : Error {
    using Error::Error;
};

struct ReflectionAtBoundaryTime : Error {
    using Error::Error;
};

struct NonAdmissibleWord : Error {
    using Error::Error;
};

struct MinimizationStalled : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

/// A perturbed trajectory left the reference orbit's symbol sequence.
struct ItineraryChanged : Error {
    using Error::Error;
};

struct WindowTooShort : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG streams.
//
// Every Monte-Carlo task derives its own generator from (master seed, task
// index) so results do not depend on the number of worker threads or on
// scheduling order.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed for task `index` under `master` (stable under thread count).
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// xoshiro-free small generator: std::mt19937_64 seeded per stream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next_u64() {
        // splitmix64 sequence; tiny state, excellent equidistribution for our use
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1) with 53 random bits; identical across platforms.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Static-partition parallel loop. Tasks are split into contiguous blocks by
// index, so any per-task output written to task-indexed slots is identical
// for every thread count.

inline void parallel_for(std::size_t n_tasks, unsigned n_threads,
                         const std::function<void(std::size_t)>& body) {
    if (n_threads <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) body(i);
        return;
    }
    unsigned workers = n_threads;
    if (workers > n_tasks) workers = static_cast<unsigned>(n_tasks);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([=, &body]() {
            const std::size_t lo = n_tasks * w / workers;
            const std::size_t hi = n_tasks * (w + 1) / workers;
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

inline unsigned default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

}  // namespace obl
