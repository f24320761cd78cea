#include "sfdr/star_protocol.hpp"

#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace sfdr {

std::size_t StarTranscript::total_rejections() const noexcept {
    std::size_t r = 0;
    for (const auto& rej : per_node_rejections) r += rej.rejection_count();
    return r;
}

StarTranscript run_star(std::span<const PValueBatch> batches, std::span<const SamplingScheme> schemes,
                        double alpha, StarOptions options) {
    check_alpha(alpha);
    if (schemes.size() != batches.size()) {
        throw std::domain_error("run_star: one sampling scheme per batch required");
    }

    std::vector<SampledCdf> reports;
    std::vector<std::size_t> uplink;
    reports.reserve(batches.size());
    uplink.reserve(batches.size());
    for (std::size_t i = 0; i < batches.size(); ++i) {
        reports.push_back(sample_cdf(batches[i], schemes[i]));
        const bool local = options.center_holds_first_batch && i == 0;
        uplink.push_back(local ? 0 : encode(reports.back()).payload_bits);
    }

    PooledCdf pooled = pool(reports);  // throws on an all-empty network
    const ThresholdResult th = solve_threshold(pooled, alpha, pooled.total_m());

    std::vector<RejectionResult> rejections;
    rejections.reserve(batches.size());
    for (const auto& b : batches) rejections.push_back(reject_at(b, th.tau));

    const std::size_t leaves = batches.size() - (options.center_holds_first_batch ? 1 : 0);
    return StarTranscript{std::move(reports),
                          std::move(pooled),
                          th.tau,
                          th.supporting_count,
                          std::move(rejections),
                          std::move(uplink),
                          leaves * kThresholdBits,
                          options.center_holds_first_batch};
}

StarTranscript run_star(std::span<const PValueBatch> batches, const SamplingScheme& scheme, double alpha,
                        StarOptions options) {
    std::vector<SamplingScheme> schemes(batches.size(), scheme);
    return run_star(batches, schemes, alpha, options);
}

void write_trace(std::ostream& os, const StarTranscript& t) {
    const auto old_precision = os.precision();
    os << std::setprecision(17);
    for (std::size_t i = 0; i < t.reports.size(); ++i) {
        const auto& r = t.reports[i];
        os << "up node=" << r.node_id << " bits=" << t.uplink_bits[i] << " m=" << r.m << " counts=";
        for (std::size_t j = 0; j < r.counts.size(); ++j) os << (j ? "," : "") << r.counts[j];
        os << '\n';
    }
    for (std::size_t i = 0; i < t.reports.size(); ++i) {
        if (t.center_holds_first_batch && i == 0) continue;
        os << "down node=" << t.reports[i].node_id << " bits=" << kThresholdBits << " tau=" << t.tau_hat
           << '\n';
    }
    os.precision(old_precision);
}

}  // namespace sfdr
