#pragma once

#include <cstdint>
#include <random>

namespace sfdr {

/// Named substreams derived from one experiment seed.
enum class Stream : std::uint64_t {
    TrialData = 1,
    Topology = 2,
    Mixture = 3,
    Scratch = 4,
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// A 64-bit Mersenne Twister keyed by (seed, stream, index, attempt).
///
/// The key is folded through SplitMix64, so distinct keys give unrelated
/// engine states; the same key always reproduces the same draws.
class Rng {
public:
    using engine_type = std::mt19937_64;

    Rng(std::uint64_t seed, Stream stream, std::uint64_t index, std::uint64_t attempt = 0);

    engine_type& engine() noexcept { return engine_; }

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }
    std::uint64_t poisson(double mean);

private:
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sfdr
