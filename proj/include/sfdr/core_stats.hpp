#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sfdr {

/// P-values held by one node, with ground-truth null flags.
///
/// The flags are only consulted when scoring a procedure (FDP/TDP); no
/// testing procedure looks at them. Empty batches are legal.
class PValueBatch {
public:
    PValueBatch() = default;

    /// Throws std::domain_error if a value lies outside [0,1] or the flag
    /// vector has a different length.
    PValueBatch(int node_id, std::vector<double> values, std::vector<bool> is_null);

    /// Batch whose hypotheses are all marked null (handy for tests and CLI input).
    static PValueBatch unlabeled(int node_id, std::vector<double> values);

    int node_id() const noexcept { return node_id_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<const double> values() const noexcept { return values_; }
    double value(std::size_t j) const { return values_.at(j); }
    bool is_null(std::size_t j) const { return is_null_.at(j); }

    std::size_t null_count() const noexcept;
    std::size_t alternative_count() const noexcept { return size() - null_count(); }

private:
    int node_id_ = 0;
    std::vector<double> values_;
    std::vector<bool> is_null_;
};

/// Concatenation of several batches in order (used for pooled BH).
PValueBatch concatenate(std::span<const PValueBatch> batches, int node_id = -1);

struct RejectionResult {
    std::vector<std::size_t> rejected_indices;  // ascending
    double threshold = 0.0;

    std::size_t rejection_count() const noexcept { return rejected_indices.size(); }
};

struct ErrorMetrics {
    double fdp = 0.0;
    double tdp = 0.0;
    std::size_t false_rejections = 0;
    std::size_t total_rejections = 0;
};

/// Fraction of the batch at or below t. Returns 0 for an empty batch.
double pseudo_cdf(const PValueBatch& batch, double t);

/// The BH line alpha*k/m, clamped to alpha.
///
/// Every threshold in the library is produced by this one expression so that
/// centralized and sampled thresholds compare exactly in floating point.
double step_up_line(double alpha, std::size_t k, std::size_t m);

/// Rejects every p-value <= threshold.
RejectionResult reject_at(const PValueBatch& batch, double threshold);

/// Benjamini-Hochberg step-up at level alpha. Requires a nonempty batch.
RejectionResult bh_procedure(const PValueBatch& batch, double alpha);

/// Local BH at the node-wise Bonferroni size alpha * m_i / global_m.
RejectionResult bonferroni_local(const PValueBatch& batch, double alpha, std::size_t global_m);

ErrorMetrics metrics(const PValueBatch& batch, const RejectionResult& result);
ErrorMetrics metrics(std::span<const PValueBatch> batches, std::span<const RejectionResult> results);

void check_alpha(double alpha);

}  // namespace sfdr
