#pragma once

#include <cstdint>
#include <initializer_list>

namespace sspde {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stateless counter-based generator: every draw is a pure function of
// (seed, key...), so results do not depend on evaluation order or threads.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(splitmix64(seed ^ 0x5350444531ULL)) {}

    std::uint64_t bits(std::initializer_list<std::uint64_t> key) const;
    // Uniform in the open interval (0, 1).
    double uniform(std::initializer_list<std::uint64_t> key) const;
    // Pair of independent standard normals from one key (Box-Muller).
    void normal_pair(std::initializer_list<std::uint64_t> key, double& a, double& b) const;
    double normal(std::initializer_list<std::uint64_t> key) const;

    std::uint64_t seed_hash() const { return seed_; }

private:
    std::uint64_t seed_;
};

// Packs a signed wavevector into one key word.
inline std::uint64_t wavevector_key(int k1, int k2) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k1 + (1 << 20))) << 32) |
           static_cast<std::uint32_t>(k2 + (1 << 20));
}

// Derived seed for realization r of a base seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r) {
    return splitmix64(splitmix64(seed) ^ (r + 0x243f6a8885a308d3ULL));
}

}  // namespace sspde
