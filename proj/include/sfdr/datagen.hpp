#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sfdr/core_stats.hpp"
#include "sfdr/rng.hpp"

namespace sfdr {

enum class MuDraw { PerStatistic, PerNode };
enum class DependenceScope { Global, PerNode };
enum class GridSpan { Alpha, Unit };

struct ExperimentConfig {
    std::size_t N = 100;
    double lambda = 3.0;
    double alpha = 0.2;
    int M = 3;
    double rho = 0.0;
    std::size_t trials = 10000;
    std::uint64_t seed = 20230101;
    std::string scheme = "interior";  // inclusive | interior
    GridSpan grid_span = GridSpan::Alpha;
    MuDraw mu_draw = MuDraw::PerStatistic;
    DependenceScope dependence_scope = DependenceScope::Global;
    std::string topology = "star";
    int hops = 1;

    /// Throws std::domain_error on an invalid combination.
    void validate() const;

    /// Non-null probability at node i (1-indexed): 0.5 - 0.4 * i / N.
    double pi1(std::size_t i) const;
    /// Center of the alternative mean range at node i: 2 + 4 * i / N.
    double mu_base(std::size_t i) const;
};

/// Sets one field from its textual form; throws std::domain_error on an
/// unknown key or unparsable value.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment. Keys are the field names
/// above (N, lambda, alpha, M, rho, trials, seed, scheme, grid_span,
/// mu_draw, dependence_scope, topology, hops).
ExperimentConfig read_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

struct TrialData {
    std::vector<PValueBatch> batches;
    std::size_t total_m = 0;
    std::size_t total_m0 = 0;
    std::size_t total_m1 = 0;
    /// Extra draws taken because an earlier draw had no p-values anywhere.
    std::size_t resamples = 0;
};

/// Two-sided normal p-value 2 * (1 - Phi(|x|)).
double two_sided_p(double statistic);

/// AR(1) chain of length n: e_1 = z_1, e_k = rho e_{k-1} + sqrt(1 - rho^2) z_k.
/// Corr(e_i, e_j) = rho^|i-j| with unit marginal variance.
std::vector<double> ar1_noise(std::size_t n, double rho, Rng& rng);

/// Independent statistics.
TrialData generate_trial(const ExperimentConfig& config, std::uint64_t trial_index);

/// AR(1) noise e_k = rho e_{k-1} + sqrt(1 - rho^2) z_k over the global
/// concatenated order (or restarted per node with DependenceScope::PerNode).
/// With rho = 0 the output equals generate_trial exactly.
TrialData generate_dependent_trial(const ExperimentConfig& config, std::uint64_t trial_index);

/// i.i.d. mixture batch: null with probability pi0, else N(mu, 1).
PValueBatch generate_mixture_batch(double pi0, double mu, std::size_t m, Rng& rng, int node_id = 0);

}  // namespace sfdr
