#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "sfdr/cdf_sampling.hpp"
#include "sfdr/core_stats.hpp"

namespace sfdr {

/// Bits charged for one broadcast threshold (a full-precision double).
inline constexpr std::size_t kThresholdBits = 64;

struct StarOptions {
    /// Treat batches[0] as held by the center itself: it reports at zero
    /// uplink cost and receives no downlink.
    bool center_holds_first_batch = false;
};

struct StarTranscript {
    std::vector<SampledCdf> reports;
    PooledCdf pooled;
    double tau_hat = 0.0;
    std::size_t supporting_count = 0;
    std::vector<RejectionResult> per_node_rejections;
    std::vector<std::size_t> uplink_bits;
    std::size_t downlink_bits = 0;
    bool center_holds_first_batch = false;

    std::size_t total_rejections() const noexcept;
};

/// Sample, pool at the center, broadcast tau-hat, reject locally.
/// Throws std::domain_error when every batch is empty.
StarTranscript run_star(std::span<const PValueBatch> batches, const SamplingScheme& scheme,
                        double alpha, StarOptions options = {});

/// Per-node schemes (e.g. exhaustive explicit locations).
StarTranscript run_star(std::span<const PValueBatch> batches, std::span<const SamplingScheme> schemes,
                        double alpha, StarOptions options = {});

/// One line per message:
///   up node=<id> bits=<n> m=<m_i> counts=<k1,k2,...>
///   down node=<id> bits=64 tau=<tau-hat>
void write_trace(std::ostream& os, const StarTranscript& transcript);

}  // namespace sfdr
