#include "ckm/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ckm {

std::uint64_t Rng::index(std::uint64_t n) {
    if (n <= 1) return 0;
    // Rejection on the top multiple of n.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % n;
}

double Rng::normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::rayleigh(double mean) {
    const double sigma = mean / std::sqrt(std::numbers::pi / 2.0);
    const double u = uniform01();
    return sigma * std::sqrt(-2.0 * std::log1p(-u));
}

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const std::uint64_t base = mix64(mix64(seed ^ 0xd1b54a32d192ed03ULL) ^ mix64(stream)) ^ counter;
    const std::uint64_t a = mix64(base * 2 + 0);
    const std::uint64_t b = mix64(base * 2 + 1);
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ckm
