#pragma once

#include <cstdint>
#include <string_view>

#include "loclearn/common.hpp"

namespace loclearn {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// xoshiro256** seeded through splitmix64. Fully portable: identical streams on
// every platform for the same seed, unlike the standard-library distributions.
//
// Stream splitting rule: child(tag) derives an independent stream from the
// parent seed path and the tag string, so e.g. partition offsets, pool draws
// and evaluation draws of one experiment seed never share a stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0,1)
    Real next_double() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    Real uniform(Real lo, Real hi) { return lo + (hi - lo) * next_double(); }

    // unbiased uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    bool bernoulli(Real p) { return next_double() < p; }

    Point uniform_point(std::size_t dims) {
        Point p(dims);
        for (auto& c : p) c = next_double();
        return p;
    }

    Rng child(std::string_view tag) const {
        return Rng(state_[0] ^ detail::fnv1a(tag) ^ (state_[3] * 0x2545f4914f6cdd1dULL));
    }

    Rng child_index(std::uint64_t index) const {
        std::uint64_t mix = state_[0] ^ (index * 0x9e3779b97f4a7c15ULL) ^ (state_[2] + index);
        return Rng(mix);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
};

}  // namespace loclearn
