#include "sfdr/rng.hpp"

namespace sfdr {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

std::uint64_t fold_key(std::uint64_t seed, Stream stream, std::uint64_t index, std::uint64_t attempt) {
    std::uint64_t state = seed;
    std::uint64_t h = splitmix64(state);
    for (std::uint64_t word : {static_cast<std::uint64_t>(stream), index, attempt}) {
        state = h ^ word;
        h = splitmix64(state);
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed, Stream stream, std::uint64_t index, std::uint64_t attempt) {
    std::uint64_t state = fold_key(seed, stream, index, attempt);
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                      static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                      static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                      static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
    engine_.seed(seq);
}

std::uint64_t Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    return static_cast<std::uint64_t>(std::poisson_distribution<std::int64_t>(mean)(engine_));
}

}  // namespace sfdr
