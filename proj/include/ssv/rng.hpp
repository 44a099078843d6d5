#pragma once

#include <cstdint>
#include <random>

namespace ssv {

/// splitmix64 step; used to derive independent, well-mixed stream seeds from a
/// (master seed, counter) pair so that path k's draws never depend on how many
/// paths ran before it or on the thread that ran it.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t counter) noexcept {
    std::uint64_t s = master;
    (void)splitmix64(s);  // decorrelate master from counter arithmetic
    s += counter * 0x9E3779B97F4A7C15ULL;
    return splitmix64(s);
}

inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t counter) {
    return std::mt19937_64(stream_seed(master, counter));
}

}  // namespace ssv
