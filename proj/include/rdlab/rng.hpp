#pragma once

#include <cstdint>
#include <random>

#include "rdlab/grid.hpp"

namespace rdlab {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
} // namespace detail

/// Deterministic per-task random stream. Streams derived from the same
/// (master, index) pair are identical regardless of scheduling, which is what
/// makes replica-parallel runs reproducible at any worker count.
class RngStream {
  public:
    RngStream() : RngStream(1, 0) {}
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t s = master_seed ^ (0xD1B54A32D192ED03ull * (stream_index + 1));
        std::seed_seq seq{detail::splitmix64(s), detail::splitmix64(s),
                          detail::splitmix64(s), detail::splitmix64(s)};
        gen_.seed(seq);
    }

    double normal() { return normal_(gen_); }
    double uniform() { return uniform_(gen_); }
    std::uint64_t bits() { return gen_(); }

    /// child stream for a sub-task (frame, replica within replica, ...)
    RngStream child(std::uint64_t index) {
        std::uint64_t s = gen_(); // advances this stream deterministically
        return RngStream(s, index);
    }

  private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// iid standard normals in site order
inline Field gaussian_field(const Grid& g, RngStream& rng, double stddev = 1.0) {
    Field f(g);
    for (auto& v : f.values) v = stddev * rng.normal();
    return f;
}

} // namespace rdlab
