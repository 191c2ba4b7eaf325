#pragma once

#include <cstdint>
#include <random>

namespace gunloc {

/// Seedable generator with portable draws: std::mt19937_64 fixes the raw
/// stream, and the derived distributions below are written out so results do
/// not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Independent child stream for trial/scenario `stream` (SplitMix64 of seed and index).
    Rng split(std::uint64_t stream) const;

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform on {0, ..., n - 1}; n > 0.
    std::uint64_t index(std::uint64_t n);
    /// Standard normal via Box-Muller (one draw per call).
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gunloc
