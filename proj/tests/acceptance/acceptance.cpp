// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sfdr/cdf_sampling.hpp"
#include "sfdr/core_stats.hpp"
#include "sfdr/datagen.hpp"
#include "sfdr/experiments.hpp"
#include "sfdr/multihop_qute.hpp"
#include "sfdr/star_protocol.hpp"
#include "sfdr/theory_oracle.hpp"

using namespace sfdr;

namespace {

constexpr std::size_t kSweepTrials = 2000;
constexpr double kAlpha = 0.2;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("%s criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

struct Mean {
    double mean = 0.0;
    double se = 0.0;
};

Mean mean_se(const std::vector<double>& xs) {
    Mean m;
    const auto n = static_cast<double>(xs.size());
    for (double x : xs) m.mean += x;
    m.mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (n - 1.0) / n);
    return m;
}

// ---------------------------------------------------------------- sweeps

struct Cell {
    double value = 0.0;
    std::map<std::string, SweepRow> rows;
};

struct Sweep {
    Experiment experiment;
    std::vector<Cell> cells;
    std::size_t uplink_violations = 0;
    std::size_t uplink_checked = 0;
};

Sweep run_experiment(Experiment e, const std::vector<std::string>& method_names) {
    ExperimentConfig base;
    base.trials = kSweepTrials;
    const SweepSpec spec = SweepSpec::preset(e, base);
    std::vector<MethodSpec> methods;
    for (const auto& m : method_names) methods.push_back(MethodSpec::parse(m));
    const auto sf = static_cast<std::size_t>(
        std::find(method_names.begin(), method_names.end(), "sample-forward") - method_names.begin());

    Sweep out{e, {}, 0, 0};
    for (double v : spec.sweep_values) {
        const ExperimentConfig config = with_sweep_value(spec.base, e, v);
        const std::size_t samples = make_scheme(config).sample_count();
        std::vector<TrialOutcome> trials;
        trials.reserve(config.trials);
        for (std::size_t t = 0; t < config.trials; ++t) {
            trials.push_back(run_trial(config, t, methods));
            const auto& bits = trials.back().methods[sf].bits_per_node;
            const auto& sizes = trials.back().node_sizes;
            for (std::size_t i = 0; i < sizes.size(); ++i) {
                const std::size_t bound = sizes[i] == 0 ? 1 : (samples + 1) * count_width_bits(sizes[i]);
                ++out.uplink_checked;
                if (bits[i] > bound) ++out.uplink_violations;
            }
        }
        Cell cell{v, {}};
        for (auto& row : summarize(trials, v)) cell.rows.emplace(row.method, row);
        out.cells.push_back(std::move(cell));
    }
    return out;
}

void criterion_fdr(const std::vector<Sweep>& sweeps) {
    int checked = 0;
    double worst = -1.0;
    std::string worst_at;
    for (const auto& s : sweeps) {
        for (const auto& c : s.cells) {
            for (const char* m : {"sample-forward", "qute:star", "qute:erdos-renyi:0.05"}) {
                const auto& r = c.rows.at(m);
                const double bound = r.m0_mean / r.m_mean * kAlpha + 3.0 * r.fdr_stderr;
                const double excess = r.fdr_hat - bound;
                ++checked;
                if (excess > worst) {
                    worst = excess;
                    worst_at = std::string(m) + " exp" + std::to_string(static_cast<int>(s.experiment)) + " " +
                               sweep_param_name(s.experiment) + "=" + fmt("%g", c.value);
                }
            }
        }
    }
    report(1, worst <= 0.0, "FDR <= (m0/m) alpha + 3 se in every cell",
           std::to_string(checked) + " cells, largest FDR - bound = " + fmt("%.4f", worst) + " at " + worst_at);
}

void criterion_figures(const Sweep& e1, const Sweep& e2, const Sweep& e3, const Sweep& e4) {
    // (a) sample-forward within 0.05 of pooled BH from M = 3 upward
    double worst_a = 0.0;
    for (const auto& c : e1.cells) {
        if (c.value < 3.0) continue;
        worst_a = std::max(worst_a, std::fabs(c.rows.at("pooled-bh").power_hat - c.rows.at("sample-forward").power_hat));
    }
    const bool a = worst_a <= 0.05;

    // (b) monotone trends; a step may move against the trend by one standard
    // error of the step, sqrt(se_k^2 + se_{k+1}^2)
    double worst_b = -1.0;
    for (const Sweep* s : {&e2, &e3}) {
        for (std::size_t k = 0; k + 1 < s->cells.size(); ++k) {
            const auto& sf0 = s->cells[k].rows.at("sample-forward");
            const auto& sf1 = s->cells[k + 1].rows.at("sample-forward");
            const double sf_noise = std::hypot(sf0.power_stderr, sf1.power_stderr);
            worst_b = std::max(worst_b, (sf0.power_hat - sf1.power_hat) - sf_noise);
            const auto& bf0 = s->cells[k].rows.at("bonferroni");
            const auto& bf1 = s->cells[k + 1].rows.at("bonferroni");
            const double bf_noise = std::hypot(bf0.power_stderr, bf1.power_stderr);
            worst_b = std::max(worst_b, (bf1.power_hat - bf0.power_hat) - bf_noise);
        }
    }
    const bool b = worst_b <= 0.0;

    // (c) sample-forward FDR under dependence
    double worst_c = -1.0;
    for (const auto& c : e4.cells) {
        const auto& r = c.rows.at("sample-forward");
        worst_c = std::max(worst_c, r.fdr_hat - (kAlpha + 3.0 * r.fdr_stderr));
    }
    const bool cc = worst_c <= 0.0;

    report(7, a && b && cc, "qualitative trends",
           std::string("(a) ") + (a ? "ok" : "fail") + " max |BH - SF| power for M>=3 = " + fmt("%.4f", worst_a) +
               "; (b) " + (b ? "ok" : "fail") + " largest counter-trend step beyond noise = " +
               fmt("%.4f", worst_b) + "; (c) " + (cc ? "ok" : "fail") +
               " largest FDR - (alpha + 3 se) = " + fmt("%.4f", worst_c));
}

void criterion_bits(const std::vector<Sweep>& sweeps, const Sweep& e2) {
    std::size_t checked = 0;
    std::size_t violations = 0;
    for (const auto& s : sweeps) {
        checked += s.uplink_checked;
        violations += s.uplink_violations;
    }

    std::vector<double> lambda;
    std::vector<double> bits;
    for (const auto& c : e2.cells) {
        lambda.push_back(c.value);
        bits.push_back(c.rows.at("sample-forward").mean_bits_per_node);
    }
    struct Fit {
        double slope = 0.0;
        double r2 = 0.0;
    };
    const auto fit = [&](const std::vector<double>& x) {
        const auto n = static_cast<double>(x.size());
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mx += x[i] / n;
            my += bits[i] / n;
        }
        double sxy = 0.0;
        double sxx = 0.0;
        double syy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (bits[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (bits[i] - my) * (bits[i] - my);
        }
        return Fit{sxy / sxx, sxy * sxy / (sxx * syy)};
    };
    std::vector<double> log_lambda;
    for (double l : lambda) log_lambda.push_back(std::log(l));
    const Fit log_fit = fit(log_lambda);
    const Fit lin_fit = fit(lambda);
    bool per_lambda_falls = true;
    for (std::size_t k = 0; k + 1 < bits.size(); ++k) {
        per_lambda_falls = per_lambda_falls && bits[k + 1] / lambda[k + 1] < bits[k] / lambda[k];
    }

    const bool pass = violations == 0 && log_fit.slope > 0.0 && per_lambda_falls && log_fit.r2 >= lin_fit.r2;
    report(8, pass, "uplink bits bounded per trial and logarithmic in lambda",
           std::to_string(violations) + " violations in " + std::to_string(checked) +
               " node-trials; slope vs log(lambda) = " + fmt("%.3f", log_fit.slope) + ", R^2 log " +
               fmt("%.4f", log_fit.r2) + " vs linear " + fmt("%.4f", lin_fit.r2) + ", bits/lambda " +
               (per_lambda_falls ? "strictly falling" : "not falling"));
}

// ------------------------------------------------------ randomized instances

std::vector<PValueBatch> random_batches(std::mt19937_64& gen, std::size_t n, std::size_t max_size) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<PValueBatch> out;
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = gen() % (max_size + 1);
        std::vector<double> v(m);
        for (auto& x : v) {
            const double u = unif(gen);
            if (u < 0.5) x = unif(gen);
            else if (u < 0.9) x = 0.05 * unif(gen) * unif(gen);
            else if (u < 0.95) x = 0.0;
            else x = 0.01 * static_cast<double>(gen() % 25);
        }
        total += m;
        out.push_back(PValueBatch::unlabeled(static_cast<int>(i), std::move(v)));
    }
    if (total == 0) out[0] = PValueBatch::unlabeled(0, {0.003});
    return out;
}

SamplingScheme random_scheme(std::mt19937_64& gen, double alpha) {
    const int M = 2 + static_cast<int>(gen() % 15);
    switch (gen() % 4) {
        case 0: return SamplingScheme::inclusive_grid(M, alpha);
        case 1: return SamplingScheme::interior_grid(M, alpha);
        case 2: return SamplingScheme::interior_grid(M, alpha, 1.0);
        default: {
            std::uniform_real_distribution<double> unif(0.0, alpha);
            std::vector<double> locs(static_cast<std::size_t>(M));
            for (auto& x : locs) x = unif(gen);
            std::sort(locs.begin(), locs.end());
            locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
            return SamplingScheme::explicit_locations(std::move(locs), alpha);
        }
    }
}

bool nested(std::span<const PValueBatch> batches, std::span<const RejectionResult> rejections, double tau_bh) {
    for (std::size_t i = 0; i < batches.size(); ++i) {
        for (std::size_t j : rejections[i].rejected_indices) {
            if (batches[i].value(j) > tau_bh) return false;
        }
    }
    return true;
}

void criterion_dominance() {
    std::mt19937_64 gen(20230101);
    constexpr double alphas[] = {0.05, 0.1, 0.2, 0.3};
    constexpr const char* topologies[] = {"star", "complete", "path", "cycle", "erdos-renyi:0.2", "erdos-renyi:0.5"};
    const int instances = 10000;
    int violations = 0;
    for (int k = 0; k < instances; ++k) {
        const std::size_t n = 1 + gen() % 12;
        const auto batches = random_batches(gen, n, 40);
        const double alpha = alphas[gen() % 4];
        const auto bh = bh_procedure(concatenate(batches), alpha);

        std::vector<SamplingScheme> schemes;
        const bool shared = gen() % 2 == 0;
        const auto common = random_scheme(gen, alpha);
        for (std::size_t i = 0; i < n; ++i) schemes.push_back(shared ? common : random_scheme(gen, alpha));

        if (k % 2 == 0) {
            const auto t = run_star(batches, schemes, alpha);
            if (!(t.tau_hat <= bh.threshold) || !nested(batches, t.per_node_rejections, bh.threshold)) ++violations;
        } else {
            Rng rng(20230101, Stream::Topology, static_cast<std::uint64_t>(k));
            const auto topo = TopologySpec::parse(topologies[gen() % 6]);
            const NetworkGraph net(make_topology(topo, n, rng), batches);
            const int hops = 1 + static_cast<int>(gen() % 3);
            const auto t = qute_run(net, schemes, alpha, hops);
            bool ok = nested(batches, t.per_node_rejections, bh.threshold);
            for (double tau : t.final_thresholds) ok = ok && tau <= bh.threshold;
            if (!ok) ++violations;
        }
    }
    report(2, violations == 0, "tau-hat <= tau_BH and nested rejections on random instances",
           std::to_string(violations) + " violations in " + std::to_string(instances) + " instances");
}

void criterion_exact_recovery() {
    std::mt19937_64 gen(424242);
    constexpr double alphas[] = {0.05, 0.1, 0.2, 0.3};
    const int instances = 1000;
    int violations = 0;
    for (int k = 0; k < instances; ++k) {
        const std::size_t n = 1 + gen() % 12;
        const auto batches = random_batches(gen, n, 40);
        const double alpha = alphas[gen() % 4];
        const auto bh = bh_procedure(concatenate(batches), alpha);
        std::vector<SamplingScheme> schemes;
        for (const auto& b : batches) schemes.push_back(exhaustive_scheme(b, alpha));

        const auto star = run_star(batches, schemes, alpha);
        const auto qute = qute_run(NetworkGraph(complete_graph(n), batches), schemes, alpha, 1);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            const auto expected = reject_at(batches[i], bh.threshold).rejected_indices;
            ok = ok && star.per_node_rejections[i].rejected_indices == expected &&
                 qute.per_node_rejections[i].rejected_indices == expected;
        }
        if (!ok) ++violations;
    }
    report(3, violations == 0, "exhaustive sampling reproduces BH (star and complete-graph QuTE)",
           std::to_string(violations) + " mismatches in " + std::to_string(instances) + " instances");
}

// ------------------------------------------------------------ asymptotics

void criteria_asymptotic() {
    constexpr std::size_t m = 100000;
    constexpr std::size_t nodes = 100;
    constexpr int trials = 200;
    const std::vector<int> grid_sizes{3, 5, 9, 17};
    const auto model = gaussian_two_sided_mixture(0.8, 2.0);

    std::vector<AsymptoticReport> oracle;
    for (int M : grid_sizes) oracle.push_back(limiting_threshold(model, kAlpha, SamplingScheme::inclusive_grid(M, kAlpha)));

    // per grid size, per trial
    std::vector<std::vector<double>> tau_hat(grid_sizes.size());
    std::vector<std::vector<double>> gap(grid_sizes.size());
    std::vector<std::vector<double>> bh_minus_hat(grid_sizes.size());
    for (int t = 0; t < trials; ++t) {
        Rng rng(20230101, Stream::Mixture, static_cast<std::uint64_t>(t));
        const auto all = generate_mixture_batch(0.8, 2.0, m, rng);
        std::vector<PValueBatch> batches;
        const std::size_t per = m / nodes;
        for (std::size_t i = 0; i < nodes; ++i) {
            std::vector<double> v(all.values().begin() + i * per, all.values().begin() + (i + 1) * per);
            std::vector<bool> nulls;
            for (std::size_t j = i * per; j < (i + 1) * per; ++j) nulls.push_back(all.is_null(j));
            batches.emplace_back(static_cast<int>(i), std::move(v), std::move(nulls));
        }
        const auto bh = bh_procedure(all, kAlpha);
        const double bh_power = metrics(all, bh).tdp;
        for (std::size_t g = 0; g < grid_sizes.size(); ++g) {
            const auto star = run_star(batches, SamplingScheme::inclusive_grid(grid_sizes[g], kAlpha), kAlpha);
            tau_hat[g].push_back(star.tau_hat);
            bh_minus_hat[g].push_back(bh.threshold - star.tau_hat);
            gap[g].push_back(bh_power - metrics(batches, star.per_node_rejections).tdp);
        }
    }

    // 4: mean tau-hat against the limiting threshold
    bool ok4 = true;
    std::string detail4;
    for (std::size_t g = 0; g < grid_sizes.size(); ++g) {
        const double diff = std::fabs(mean_se(tau_hat[g]).mean - oracle[g].tau_bar);
        ok4 = ok4 && diff <= 0.01;
        detail4 += "M=" + std::to_string(grid_sizes[g]) + " tau_bar=" + fmt("%.5f", oracle[g].tau_bar) +
                   " |diff|=" + fmt("%.5f", diff) + (g + 1 < grid_sizes.size() ? "; " : "");
    }
    report(4, ok4, "mean tau-hat matches alpha F(t_j*) within 0.01", detail4);

    // 5: threshold loss per trial
    bool ok5 = true;
    std::string detail5;
    for (std::size_t g = 0; g < grid_sizes.size(); ++g) {
        const double limit = kAlpha / (grid_sizes[g] - 1) + 0.005;
        const auto within = std::count_if(bh_minus_hat[g].begin(), bh_minus_hat[g].end(),
                                          [limit](double d) { return d <= limit; });
        const double share = static_cast<double>(within) / trials;
        ok5 = ok5 && share >= 0.99;
        detail5 += "M=" + std::to_string(grid_sizes[g]) + " " + fmt("%.3f", share) +
                   (g + 1 < grid_sizes.size() ? "; " : "");
    }
    report(5, ok5, "tau_BH - tau-hat <= alpha/(M-1) + 0.005 in >= 99% of trials", detail5);

    // 6: power gap bound and monotonicity in M
    bool ok6 = true;
    std::string detail6;
    for (std::size_t g = 0; g < grid_sizes.size(); ++g) {
        const Mean gm = mean_se(gap[g]);
        const double bound = oracle[g].power_gap_bound;
        ok6 = ok6 && gm.mean <= bound + 3.0 * gm.se;
        detail6 += "M=" + std::to_string(grid_sizes[g]) + " gap=" + fmt("%.4f", gm.mean) + " bound=" +
                   (std::isinf(bound) ? std::string("inf") : fmt("%.4f", bound)) + "; ";
    }
    for (std::size_t g = 0; g + 1 < grid_sizes.size(); ++g) {
        std::vector<double> step;
        for (int t = 0; t < trials; ++t) step.push_back(gap[g + 1][t] - gap[g][t]);
        const Mean s = mean_se(step);
        if (s.mean > 3.0 * s.se) {
            ok6 = false;
            detail6 += "gap rises from M=" + std::to_string(grid_sizes[g]) + "; ";
        }
    }
    detail6 += "nonincreasing within 3 paired se";
    report(6, ok6, "power gap within C* alpha/(M-1) and nonincreasing in M", detail6);
}

// ------------------------------------------------------------- generator

double ks_uniform(std::vector<double> p) {
    std::sort(p.begin(), p.end());
    const auto n = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        d = std::max(d, std::max(static_cast<double>(i + 1) / n - p[i], p[i] - static_cast<double>(i) / n));
    }
    return d;
}

double lag1(const std::vector<double>& e) {
    double mean = 0.0;
    for (double x : e) mean += x / static_cast<double>(e.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        den += (e[k] - mean) * (e[k] - mean);
        if (k > 0) num += (e[k] - mean) * (e[k - 1] - mean);
    }
    return num / den;
}

void criterion_generator() {
    constexpr std::size_t target = 1'000'000;
    const auto collect_nulls = [](double rho) {
        ExperimentConfig c;
        c.rho = rho;
        std::vector<double> nulls;
        nulls.reserve(target);
        for (std::uint64_t t = 0; nulls.size() < target; ++t) {
            const auto data = generate_dependent_trial(c, t);
            for (const auto& b : data.batches) {
                for (std::size_t j = 0; j < b.size() && nulls.size() < target; ++j) {
                    if (b.is_null(j)) nulls.push_back(b.value(j));
                }
            }
        }
        return nulls;
    };
    const double ks_ind = ks_uniform(collect_nulls(0.0));
    const double ks_dep = ks_uniform(collect_nulls(0.9));

    Rng r9(20230101, Stream::Scratch, 9);
    const double c9 = lag1(ar1_noise(target, 0.9, r9));
    Rng r0(20230101, Stream::Scratch, 0);
    const double c0 = lag1(ar1_noise(target, 0.0, r0));

    const bool pass = ks_ind <= 0.002 && ks_dep <= 0.002 && std::fabs(c9 - 0.9) <= 0.005 && std::fabs(c0) <= 0.005;
    report(9, pass, "null p-values uniform and AR(1) lag-one correlation",
           "KS independent " + fmt("%.6f", ks_ind) + ", KS rho=0.9 " + fmt("%.6f", ks_dep) + ", lag-1 at rho=0.9 " +
               fmt("%.5f", c9) + ", at rho=0 " + fmt("%.5f", c0));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::string> core{"sample-forward", "pooled-bh", "qute:star", "qute:erdos-renyi:0.05"};
    std::vector<std::string> with_bonferroni = core;
    with_bonferroni.push_back("bonferroni");

    std::vector<Sweep> sweeps;
    sweeps.push_back(run_experiment(Experiment::VaryM, core));
    sweeps.push_back(run_experiment(Experiment::VaryLambda, with_bonferroni));
    sweeps.push_back(run_experiment(Experiment::VaryN, with_bonferroni));
    sweeps.push_back(run_experiment(Experiment::VaryRho, core));

    criterion_fdr(sweeps);
    criterion_dominance();
    criterion_exact_recovery();
    criteria_asymptotic();
    criterion_figures(sweeps[0], sweeps[1], sweeps[2], sweeps[3]);
    criterion_bits(sweeps, sweeps[1]);
    criterion_generator();

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of 9 criteria failed (%.0f s)\n", failures, secs);
    return failures == 0 ? 0 : 1;
}
