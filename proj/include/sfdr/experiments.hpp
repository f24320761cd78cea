#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sfdr/cdf_sampling.hpp"
#include "sfdr/core_stats.hpp"
#include "sfdr/datagen.hpp"

namespace sfdr {

enum class Experiment { VaryM = 1, VaryLambda = 2, VaryN = 3, VaryRho = 4 };
enum class Method { SampleForward, PooledBH, Bonferroni, Qute };

struct MethodSpec {
    Method method = Method::SampleForward;
    std::string topology = "star";  // Qute only

    /// sample-forward | pooled-bh | bonferroni | qute:<topology>
    static MethodSpec parse(std::string_view text);
    std::string label() const;
};

struct SweepSpec {
    Experiment experiment = Experiment::VaryM;
    std::vector<double> sweep_values;
    ExperimentConfig base;
    std::vector<MethodSpec> methods;

    /// Fixed parameters and default sweep grid of one of the four experiments:
    ///   1: N=100, lambda=3, M in {2,3,4,5,7,10,15,20}
    ///   2: M=3, N=100, lambda in 1..10
    ///   3: M=3, lambda=3, N in 5,30,...,205
    ///   4: M=3, lambda=3, N=100, rho in 0,0.1,...,0.9
    /// Methods default to sample-forward, pooled BH and Bonferroni.
    static SweepSpec preset(Experiment experiment, ExperimentConfig base = {});
};

std::string sweep_param_name(Experiment experiment);
ExperimentConfig with_sweep_value(const ExperimentConfig& base, Experiment experiment, double value);

/// Grid the config asks for (inclusive, or interior on [0,alpha] or [0,1]).
SamplingScheme make_scheme(const ExperimentConfig& config);

struct MethodOutcome {
    MethodSpec method;
    ErrorMetrics metrics;
    /// Shared threshold for SampleForward/PooledBH; the largest node threshold for Qute;
    /// NaN for Bonferroni, whose sizes differ per node.
    double threshold = 0.0;
    std::vector<std::size_t> bits_per_node;

    double mean_bits() const;
};

struct TrialOutcome {
    std::size_t total_m = 0;
    std::size_t total_m0 = 0;
    std::size_t total_m1 = 0;
    std::size_t resamples = 0;
    double tau_bh = 0.0;
    std::vector<std::size_t> node_sizes;
    std::vector<MethodOutcome> methods;
};

/// Generates the trial's data once and runs every method on it.
///
/// Per-trial invariants are enforced and throw std::logic_error when broken:
/// sampled thresholds never exceed tau_BH, their rejection sets nest inside
/// BH's, total rejections cover every supporting count, and uplink bits stay
/// within (M+1) ceil(log2(m_i+1)) for nonempty nodes.
TrialOutcome run_trial(const ExperimentConfig& config, std::uint64_t trial_index,
                       std::span<const MethodSpec> methods);

struct SweepRow {
    std::string method;
    double sweep_value = 0.0;
    std::size_t trials = 0;
    double fdr_hat = 0.0;
    double fdr_stderr = 0.0;
    double power_hat = 0.0;
    double power_stderr = 0.0;
    double mean_bits_per_node = 0.0;
    double m_mean = 0.0;
    double m0_mean = 0.0;
};

/// Power of pooled BH minus power of `method`, paired over identical trials.
struct PairedGap {
    std::string method;
    double sweep_value = 0.0;
    double power_gap = 0.0;
    double gap_stderr = 0.0;
};

struct SweepResult {
    std::string sweep_param;
    std::vector<SweepRow> rows;
    std::vector<PairedGap> paired;
    std::size_t resampled_trials = 0;
};

struct RunOptions {
    unsigned threads = 0;            // 0: hardware concurrency
    std::ostream* log = nullptr;     // resample notices
};

/// Every method in a cell sees identical data; cells reuse trial indices
/// 0..trials-1. Aggregation runs in trial-index order.
SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options = {});

/// Aggregates one cell from already-computed trials.
std::vector<SweepRow> summarize(std::span<const TrialOutcome> trials, double sweep_value);
std::vector<PairedGap> paired_gaps(std::span<const TrialOutcome> trials, double sweep_value);

void write_csv(const SweepResult& result, std::ostream& out);
/// Throws std::runtime_error naming the path when it cannot be written.
void emit_csv(const SweepResult& result, const std::string& path);
void write_paired_csv(const SweepResult& result, std::ostream& out);

}  // namespace sfdr
