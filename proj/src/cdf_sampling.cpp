#include "sfdr/cdf_sampling.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>

namespace sfdr {

namespace {

void check_grid_size(int samples) {
    if (samples < 2) {
        throw std::domain_error("sampling grid needs at least 2 points");
    }
}

}  // namespace

SamplingScheme SamplingScheme::inclusive_grid(int samples, double alpha) {
    check_alpha(alpha);
    check_grid_size(samples);
    std::vector<double> locs(static_cast<std::size_t>(samples));
    for (int j = 0; j < samples; ++j) {
        locs[static_cast<std::size_t>(j)] = alpha * j / (samples - 1);
    }
    locs.back() = alpha;
    return SamplingScheme(SchemeKind::InclusiveGrid, alpha, std::move(locs));
}

SamplingScheme SamplingScheme::interior_grid(int samples, double alpha) {
    return interior_grid(samples, alpha, alpha);
}

SamplingScheme SamplingScheme::interior_grid(int samples, double alpha, double span) {
    check_alpha(alpha);
    check_grid_size(samples);
    if (!(span > 0.0 && span <= 1.0)) {
        throw std::domain_error("interior grid span must lie in (0,1]");
    }
    std::vector<double> locs(static_cast<std::size_t>(samples));
    for (int j = 1; j <= samples; ++j) {
        locs[static_cast<std::size_t>(j - 1)] = span * j / (samples + 1);
    }
    return SamplingScheme(SchemeKind::InteriorGrid, alpha, std::move(locs));
}

SamplingScheme SamplingScheme::explicit_locations(std::vector<double> locations, double alpha) {
    check_alpha(alpha);
    if (locations.empty()) {
        throw std::domain_error("explicit scheme needs at least one location");
    }
    for (std::size_t j = 0; j < locations.size(); ++j) {
        if (!(locations[j] >= 0.0 && locations[j] <= alpha)) {
            throw std::domain_error("explicit sampling location outside [0, alpha]");
        }
        if (j > 0 && !(locations[j] > locations[j - 1])) {
            throw std::domain_error("explicit sampling locations must be strictly increasing");
        }
    }
    return SamplingScheme(SchemeKind::ExplicitLocations, alpha, std::move(locations));
}

SamplingScheme exhaustive_scheme(const PValueBatch& batch, double alpha) {
    std::vector<double> locs{0.0};
    for (double p : batch.values()) {
        if (p <= alpha) locs.push_back(p);
    }
    std::sort(locs.begin(), locs.end());
    locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
    return SamplingScheme::explicit_locations(std::move(locs), alpha);
}

std::size_t SampledCdf::count_at(double t) const {
    if (t >= 1.0) return m;
    // last location <= t
    const auto it = std::upper_bound(locations.begin(), locations.end(), t);
    if (it == locations.begin()) return 0;
    return counts[static_cast<std::size_t>(it - locations.begin()) - 1];
}

double SampledCdf::staircase(double t) const {
    if (m == 0) return 0.0;
    return static_cast<double>(count_at(t)) / static_cast<double>(m);
}

SampledCdf sample_cdf(const PValueBatch& batch, const SamplingScheme& scheme) {
    SampledCdf out;
    out.node_id = batch.node_id();
    out.m = batch.size();
    out.locations.assign(scheme.locations().begin(), scheme.locations().end());

    std::vector<double> sorted(batch.values().begin(), batch.values().end());
    std::sort(sorted.begin(), sorted.end());
    out.counts.reserve(out.locations.size());
    for (double t : out.locations) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
        out.counts.push_back(static_cast<std::size_t>(it - sorted.begin()));
    }
    return out;
}

PooledCdf::PooledCdf(std::vector<double> jumps, std::vector<std::size_t> counts, std::size_t total_m)
    : jumps_(std::move(jumps)), counts_(std::move(counts)), total_m_(total_m) {
    if (jumps_.size() != counts_.size()) {
        throw std::logic_error("PooledCdf: jump and count lengths differ");
    }
    if (total_m_ == 0) {
        throw std::domain_error("PooledCdf: no p-values in any member");
    }
}

double PooledCdf::value_at_jump(std::size_t i) const {
    return static_cast<double>(counts_.at(i)) / static_cast<double>(total_m_);
}

std::vector<double> PooledCdf::values_at_jumps() const {
    std::vector<double> out(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = value_at_jump(i);
    return out;
}

std::size_t PooledCdf::count_at(double t) const {
    if (t >= 1.0) return total_m_;
    const auto it = std::upper_bound(jumps_.begin(), jumps_.end(), t);
    if (it == jumps_.begin()) return 0;
    return counts_[static_cast<std::size_t>(it - jumps_.begin()) - 1];
}

double PooledCdf::operator()(double t) const {
    return static_cast<double>(count_at(t)) / static_cast<double>(total_m_);
}

PooledCdf pool(std::span<const SampledCdf> sampled) {
    std::size_t total = 0;
    std::vector<double> jumps;
    for (const auto& s : sampled) {
        total += s.m;
        jumps.insert(jumps.end(), s.locations.begin(), s.locations.end());
    }
    if (total == 0) {
        throw std::domain_error("pool: every member is empty");
    }
    std::sort(jumps.begin(), jumps.end());
    jumps.erase(std::unique(jumps.begin(), jumps.end()), jumps.end());

    std::vector<std::size_t> counts(jumps.size(), 0);
    for (const auto& s : sampled) {
        if (s.m == 0) continue;
        for (std::size_t i = 0; i < jumps.size(); ++i) counts[i] += s.count_at(jumps[i]);
    }
    return PooledCdf(std::move(jumps), std::move(counts), total);
}

PooledCdf pool_shared_grid(std::span<const SampledCdf> sampled) {
    if (sampled.empty()) {
        throw std::domain_error("pool: every member is empty");
    }
    const auto& grid = sampled.front().locations;
    std::size_t total = 0;
    std::vector<std::size_t> counts(grid.size(), 0);
    for (const auto& s : sampled) {
        if (s.locations != grid) {
            throw std::domain_error("pool_shared_grid: members use different locations");
        }
        total += s.m;
        for (std::size_t j = 0; j < grid.size(); ++j) counts[j] += s.counts[j];
    }
    return PooledCdf(grid, std::move(counts), total);
}

ThresholdResult solve_threshold(const PooledCdf& pooled, double alpha, std::size_t reference_m) {
    check_alpha(alpha);
    if (reference_m < pooled.total_m()) {
        throw std::domain_error("solve_threshold: reference count below pooled count");
    }
    const auto jumps = pooled.jump_locations();
    const auto counts = pooled.counts_at_jumps();
    ThresholdResult out;
    // Scan from the top: the first qualifying jump is tau'.
    for (std::size_t i = jumps.size(); i-- > 0;) {
        const double line = step_up_line(alpha, counts[i], reference_m);
        if (jumps[i] <= line) {
            // tau' + alpha * (F(tau') - tau'/alpha) collapses to alpha * F(tau').
            out.tau = line;
            out.supporting_count = counts[i];
            out.anchored = true;
            out.anchor = jumps[i];
            break;
        }
    }
    return out;
}

double compute_threshold(const PooledCdf& pooled, double alpha) {
    return solve_threshold(pooled, alpha, pooled.total_m()).tau;
}

std::size_t count_width_bits(std::size_t m) noexcept {
    return static_cast<std::size_t>(std::bit_width(m));
}

MessageCost encode(const SampledCdf& sampled) {
    MessageCost cost;
    cost.samples_sent = sampled.counts.size();
    if (sampled.m == 0) {
        cost.payload_bits = 1;
    } else {
        cost.payload_bits = (cost.samples_sent + 1) * count_width_bits(sampled.m);
    }
    return cost;
}

namespace {

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t bytes) {
    for (std::size_t b = bytes; b-- > 0;) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xFFu));
    }
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t& pos, std::size_t bytes) {
    if (pos + bytes > in.size()) {
        throw std::domain_error("deserialize: truncated message");
    }
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < bytes; ++b) v = (v << 8) | in[pos++];
    return v;
}

std::size_t count_width_bytes(std::size_t m) { return (count_width_bits(m) + 7) / 8; }

}  // namespace

std::vector<std::uint8_t> serialize(const SampledCdf& sampled) {
    if (sampled.m > std::numeric_limits<std::uint32_t>::max() ||
        sampled.counts.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw std::domain_error("serialize: record exceeds wire field widths");
    }
    std::vector<std::uint8_t> out;
    put_be(out, static_cast<std::uint32_t>(sampled.node_id), 4);
    put_be(out, sampled.m, 4);
    put_be(out, sampled.counts.size(), 2);
    const std::size_t width = count_width_bytes(sampled.m);
    for (std::size_t k : sampled.counts) put_be(out, k, width);
    return out;
}

SampledCdf deserialize(std::span<const std::uint8_t> bytes, std::span<const double> locations) {
    std::size_t pos = 0;
    SampledCdf out;
    out.node_id = static_cast<int>(static_cast<std::uint32_t>(get_be(bytes, pos, 4)));
    out.m = static_cast<std::size_t>(get_be(bytes, pos, 4));
    const auto samples = static_cast<std::size_t>(get_be(bytes, pos, 2));
    if (samples != locations.size()) {
        throw std::domain_error("deserialize: sample count does not match supplied locations");
    }
    const std::size_t width = count_width_bytes(out.m);
    out.counts.reserve(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        const auto k = static_cast<std::size_t>(get_be(bytes, pos, width));
        if (k > out.m) throw std::domain_error("deserialize: count exceeds m_i");
        out.counts.push_back(k);
    }
    if (pos != bytes.size()) {
        throw std::domain_error("deserialize: trailing bytes");
    }
    out.locations.assign(locations.begin(), locations.end());
    return out;
}

}  // namespace sfdr
