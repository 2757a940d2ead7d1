#pragma once

#include <cstdint>
#include <random>

namespace ckm {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for a named stream of a parent seed.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream, std::uint64_t index = 0) {
    return mix64(mix64(parent ^ mix64(stream)) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Sequential generator. Sampling transforms are written out here rather than
/// taken from <random> distributions so streams are identical across standard
/// libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Unbiased integer in [0, n).
    std::uint64_t index(std::uint64_t n);
    /// Integer in [lo, hi].
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(index(static_cast<std::uint64_t>(hi - lo) + 1));
    }
    bool bernoulli(double p) { return uniform01() < p; }
    double normal();
    /// Rayleigh draw parameterized by its mean.
    double rayleigh(double mean);

private:
    std::mt19937_64 engine_;
};

/// Stateless standard normal keyed on (seed, stream, counter). Evaluation
/// order does not affect the value.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace ckm
