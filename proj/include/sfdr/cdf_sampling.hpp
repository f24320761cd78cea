#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sfdr/core_stats.hpp"

namespace sfdr {

enum class SchemeKind { InclusiveGrid, InteriorGrid, ExplicitLocations };

/// Where a node samples its pseudo-CDF.
///
/// InclusiveGrid places M points at (j-1)*alpha/(M-1), endpoints included.
/// InteriorGrid places M points at span*j/(M+1); span defaults to alpha, and
/// span = 1 gives the unscaled unit-interval reading of the same grid.
/// ExplicitLocations takes any strictly increasing set inside [0, alpha].
class SamplingScheme {
public:
    static SamplingScheme inclusive_grid(int samples, double alpha);
    static SamplingScheme interior_grid(int samples, double alpha);
    static SamplingScheme interior_grid(int samples, double alpha, double span);
    static SamplingScheme explicit_locations(std::vector<double> locations, double alpha);

    SchemeKind kind() const noexcept { return kind_; }
    double alpha() const noexcept { return alpha_; }
    std::size_t sample_count() const noexcept { return locations_.size(); }
    std::span<const double> locations() const noexcept { return locations_; }

private:
    SamplingScheme(SchemeKind kind, double alpha, std::vector<double> locations)
        : kind_(kind), alpha_(alpha), locations_(std::move(locations)) {}

    SchemeKind kind_;
    double alpha_;
    std::vector<double> locations_;
};

/// Explicit scheme sampling at 0 and at every own p-value inside [0, alpha].
/// With this scheme at every node the protocol recovers the BH threshold.
SamplingScheme exhaustive_scheme(const PValueBatch& batch, double alpha);

/// One node's report: counts k_j = #{p <= t_j} at its sampling locations.
struct SampledCdf {
    int node_id = 0;
    std::size_t m = 0;
    std::vector<double> locations;
    std::vector<std::size_t> counts;

    /// Staircase count m_i * F_i-hat(t): 0 below the first location, the last
    /// sampled count carried up to 1, and m_i at t >= 1.
    std::size_t count_at(double t) const;
    double staircase(double t) const;
};

SampledCdf sample_cdf(const PValueBatch& batch, const SamplingScheme& scheme);

/// Center-side staircase pooled from several sampled CDFs.
///
/// Values are kept as integer counts K(J) = sum_i m_i F_i-hat(J); the real
/// staircase value is K / total_m.
class PooledCdf {
public:
    PooledCdf(std::vector<double> jumps, std::vector<std::size_t> counts, std::size_t total_m);

    std::span<const double> jump_locations() const noexcept { return jumps_; }
    std::span<const std::size_t> counts_at_jumps() const noexcept { return counts_; }
    std::size_t total_m() const noexcept { return total_m_; }

    double value_at_jump(std::size_t i) const;
    std::vector<double> values_at_jumps() const;

    std::size_t count_at(double t) const;
    double operator()(double t) const;

private:
    std::vector<double> jumps_;
    std::vector<std::size_t> counts_;
    std::size_t total_m_;
};

/// General merge over the sorted union of member locations.
/// Throws std::domain_error when every member is empty.
PooledCdf pool(std::span<const SampledCdf> sampled);

/// Pointwise sum for members sharing one set of locations. Agrees exactly
/// with pool(); throws std::domain_error if the locations differ.
PooledCdf pool_shared_grid(std::span<const SampledCdf> sampled);

struct ThresholdResult {
    double tau = 0.0;
    /// K(tau'), the pooled count at the last qualifying jump; 0 when none qualify.
    std::size_t supporting_count = 0;
    bool anchored = false;
    double anchor = 0.0;  // tau'
};

/// Largest jump J with F-hat(J) >= J / alpha, then tau = alpha * F-hat(J).
double compute_threshold(const PooledCdf& pooled, double alpha);

/// Same search with the line alpha * K / reference_m in place of
/// alpha * K / total_m. reference_m = total_m gives compute_threshold; a
/// neighborhood test at size alpha * n / m uses reference_m = m.
ThresholdResult solve_threshold(const PooledCdf& pooled, double alpha, std::size_t reference_m);

enum class Encoding { IntegerCounts };

struct MessageCost {
    std::size_t payload_bits = 0;
    std::size_t samples_sent = 0;
    Encoding encoding = Encoding::IntegerCounts;
};

/// ceil(log2(m + 1)): bits needed for an integer in [0, m].
std::size_t count_width_bits(std::size_t m) noexcept;

/// (samples + 1) * ceil(log2(m_i + 1)) bits; an empty node costs one bit.
MessageCost encode(const SampledCdf& sampled);

/// Wire layout: node_id (u32), m_i (u32), M (u16), then M counts as
/// big-endian integers of ceil(count_width_bits(m_i) / 8) bytes each.
std::vector<std::uint8_t> serialize(const SampledCdf& sampled);

/// Inverse of serialize; locations are not on the wire and must be supplied.
SampledCdf deserialize(std::span<const std::uint8_t> bytes, std::span<const double> locations);

}  // namespace sfdr
