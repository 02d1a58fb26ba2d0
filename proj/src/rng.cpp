#include "sspde/rng.hpp"

#include <cmath>
#include <numbers>

namespace sspde {

std::uint64_t CounterRng::bits(std::initializer_list<std::uint64_t> key) const {
    std::uint64_t h = seed_;
    for (std::uint64_t k : key) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

double CounterRng::uniform(std::initializer_list<std::uint64_t> key) const {
    return (static_cast<double>(bits(key) >> 11) + 0.5) * 0x1.0p-53;
}

void CounterRng::normal_pair(std::initializer_list<std::uint64_t> key, double& a, double& b) const {
    const std::uint64_t h = bits(key);
    const double u1 = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(splitmix64(h) >> 11) + 0.5) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    a = r * std::cos(th);
    b = r * std::sin(th);
}

double CounterRng::normal(std::initializer_list<std::uint64_t> key) const {
    double a, b;
    normal_pair(key, a, b);
    return a;
}

}  // namespace sspde
