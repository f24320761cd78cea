#include "sfdr/core_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sfdr {

PValueBatch::PValueBatch(int node_id, std::vector<double> values, std::vector<bool> is_null)
    : node_id_(node_id), values_(std::move(values)), is_null_(std::move(is_null)) {
    if (values_.size() != is_null_.size()) {
        throw std::domain_error("PValueBatch: values and null flags differ in length");
    }
    for (double p : values_) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::domain_error("PValueBatch: p-value outside [0,1]: " + std::to_string(p));
        }
    }
}

PValueBatch PValueBatch::unlabeled(int node_id, std::vector<double> values) {
    std::vector<bool> flags(values.size(), true);
    return PValueBatch(node_id, std::move(values), std::move(flags));
}

std::size_t PValueBatch::null_count() const noexcept {
    return static_cast<std::size_t>(std::count(is_null_.begin(), is_null_.end(), true));
}

PValueBatch concatenate(std::span<const PValueBatch> batches, int node_id) {
    std::vector<double> values;
    std::vector<bool> flags;
    for (const auto& b : batches) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            values.push_back(b.value(j));
            flags.push_back(b.is_null(j));
        }
    }
    return PValueBatch(node_id, std::move(values), std::move(flags));
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::domain_error("alpha must lie in (0,1), got " + std::to_string(alpha));
    }
}

double pseudo_cdf(const PValueBatch& batch, double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::domain_error("pseudo_cdf: t outside [0,1]");
    }
    if (batch.empty()) return 0.0;
    const auto values = batch.values();
    const auto below = std::count_if(values.begin(), values.end(), [t](double p) { return p <= t; });
    return static_cast<double>(below) / static_cast<double>(values.size());
}

double step_up_line(double alpha, std::size_t k, std::size_t m) {
    return std::min(alpha, alpha * static_cast<double>(k) / static_cast<double>(m));
}

RejectionResult reject_at(const PValueBatch& batch, double threshold) {
    RejectionResult out;
    out.threshold = threshold;
    const auto values = batch.values();
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (values[j] <= threshold) out.rejected_indices.push_back(j);
    }
    return out;
}

RejectionResult bh_procedure(const PValueBatch& batch, double alpha) {
    check_alpha(alpha);
    if (batch.empty()) {
        throw std::domain_error("bh_procedure: empty batch");
    }
    std::vector<double> sorted(batch.values().begin(), batch.values().end());
    std::stable_sort(sorted.begin(), sorted.end());

    const std::size_t m = sorted.size();
    std::size_t k_hat = 0;
    for (std::size_t k = m; k >= 1; --k) {
        if (sorted[k - 1] <= step_up_line(alpha, k, m)) {
            k_hat = k;
            break;
        }
    }
    if (k_hat == 0) {
        return RejectionResult{{}, 0.0};
    }
    return reject_at(batch, step_up_line(alpha, k_hat, m));
}

RejectionResult bonferroni_local(const PValueBatch& batch, double alpha, std::size_t global_m) {
    if (global_m < batch.size()) {
        throw std::domain_error("bonferroni_local: global_m smaller than local batch");
    }
    if (batch.empty()) {
        throw std::domain_error("bonferroni_local: empty batch");
    }
    const double local_alpha =
        alpha * static_cast<double>(batch.size()) / static_cast<double>(global_m);
    return bh_procedure(batch, local_alpha);
}

ErrorMetrics metrics(std::span<const PValueBatch> batches, std::span<const RejectionResult> results) {
    if (batches.size() != results.size()) {
        throw std::logic_error("metrics: one rejection result per batch required");
    }
    ErrorMetrics out;
    std::size_t alternatives = 0;
    for (std::size_t i = 0; i < batches.size(); ++i) {
        const auto& batch = batches[i];
        alternatives += batch.alternative_count();
        for (std::size_t j : results[i].rejected_indices) {
            if (j >= batch.size()) {
                throw std::logic_error("metrics: rejected index out of range");
            }
            ++out.total_rejections;
            if (batch.is_null(j)) ++out.false_rejections;
        }
    }
    const auto r = static_cast<double>(out.total_rejections);
    const auto v = static_cast<double>(out.false_rejections);
    out.fdp = v / std::max(r, 1.0);
    out.tdp = (r - v) / std::max(static_cast<double>(alternatives), 1.0);
    return out;
}

ErrorMetrics metrics(const PValueBatch& batch, const RejectionResult& result) {
    return metrics(std::span<const PValueBatch>(&batch, 1), std::span<const RejectionResult>(&result, 1));
}

}  // namespace sfdr
