#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lbw {

using Rng = std::mt19937_64;

// Substream keyed by (seed, purpose, index); seed_seq mixes all words.
inline Rng make_stream(std::uint64_t seed, std::uint32_t purpose, std::uint32_t index = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose, index};
    return Rng(seq);
}

// The std distributions are implementation-defined; these are not.
inline double uniform01(Rng& r)
{
    return static_cast<double>(r() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& r, double p)
{
    return uniform01(r) < p;
}

inline int uniform_index(Rng& r, int n)
{
    return static_cast<int>(uniform01(r) * n);
}

} // namespace lbw
