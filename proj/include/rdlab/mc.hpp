#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "rdlab/rng.hpp"

namespace rdlab {

/// Run fn(i) for i in [0, count) on `workers` threads. fn must only touch its
/// own slot of any output array; items are pulled from an atomic counter, so
/// scheduling varies but results (indexed by i) do not.
inline void parallel_for_index(std::size_t count, int workers,
                               const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int nthreads = std::min<std::size_t>(workers, count);
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

/// Map replicas 0..n-1 to doubles with per-replica derived rng streams.
/// Deterministic in (master_seed) for any worker count.
inline std::vector<double> replica_map(std::size_t replicas, std::uint64_t master_seed,
                                       int workers,
                                       const std::function<double(std::size_t, RngStream&)>& fn) {
    std::vector<double> out(replicas);
    parallel_for_index(replicas, workers, [&](std::size_t i) {
        RngStream s(master_seed, i);
        out[i] = fn(i, s);
    });
    return out;
}

struct MeanSE {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

inline MeanSE mean_and_se(const std::vector<double>& xs) {
    MeanSE r;
    r.n = xs.size();
    if (r.n == 0) return r;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= r.n;
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v = r.n > 1 ? v / (r.n - 1) : 0.0;
    r.mean = m;
    r.std_error = std::sqrt(v / r.n);
    return r;
}

/// Bootstrap standard error of statistic(resampled xs). Deterministic: the
/// resampling stream is seeded from `seed`.
inline double bootstrap_se(const std::vector<double>& xs,
                           const std::function<double(const std::vector<double>&)>& statistic,
                           int resamples = 200, std::uint64_t seed = 0x626f6f74) {
    if (xs.size() < 2) return 0.0;
    RngStream rng(seed, xs.size());
    std::vector<double> resampled(xs.size());
    std::vector<double> stats(resamples);
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform() * xs.size());
            if (j >= xs.size()) j = xs.size() - 1;
            resampled[i] = xs[j];
        }
        stats[b] = statistic(resampled);
    }
    MeanSE ms = mean_and_se(stats);
    return ms.std_error * std::sqrt(static_cast<double>(resamples));
}

} // namespace rdlab
