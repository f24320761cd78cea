#include "sfdr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sfdr/multihop_qute.hpp"
#include "sfdr/rng.hpp"
#include "sfdr/star_protocol.hpp"

namespace sfdr {

MethodSpec MethodSpec::parse(std::string_view text) {
    if (text == "sample-forward") return {Method::SampleForward, "star"};
    if (text == "pooled-bh") return {Method::PooledBH, "star"};
    if (text == "bonferroni") return {Method::Bonferroni, "star"};
    constexpr std::string_view qute = "qute";
    if (text == qute) return {Method::Qute, "star"};
    if (text.substr(0, qute.size() + 1) == "qute:") {
        const std::string topo(text.substr(qute.size() + 1));
        TopologySpec::parse(topo);
        return {Method::Qute, topo};
    }
    throw std::domain_error("unknown method: " + std::string(text));
}

std::string MethodSpec::label() const {
    switch (method) {
        case Method::SampleForward: return "sample-forward";
        case Method::PooledBH: return "pooled-bh";
        case Method::Bonferroni: return "bonferroni";
        case Method::Qute: return "qute:" + topology;
    }
    return "unknown";
}

SweepSpec SweepSpec::preset(Experiment experiment, ExperimentConfig base) {
    SweepSpec spec;
    spec.experiment = experiment;
    spec.methods = {{Method::SampleForward}, {Method::PooledBH}, {Method::Bonferroni}};
    switch (experiment) {
        case Experiment::VaryM:
            base.N = 100;
            base.lambda = 3.0;
            spec.sweep_values = {2, 3, 4, 5, 7, 10, 15, 20};
            break;
        case Experiment::VaryLambda:
            base.M = 3;
            base.N = 100;
            for (int l = 1; l <= 10; ++l) spec.sweep_values.push_back(l);
            break;
        case Experiment::VaryN:
            base.M = 3;
            base.lambda = 3.0;
            for (int n = 5; n <= 205; n += 25) spec.sweep_values.push_back(n);
            break;
        case Experiment::VaryRho:
            base.M = 3;
            base.lambda = 3.0;
            base.N = 100;
            for (int r = 0; r <= 9; ++r) spec.sweep_values.push_back(r / 10.0);
            break;
    }
    spec.base = std::move(base);
    return spec;
}

std::string sweep_param_name(Experiment experiment) {
    switch (experiment) {
        case Experiment::VaryM: return "M";
        case Experiment::VaryLambda: return "lambda";
        case Experiment::VaryN: return "N";
        case Experiment::VaryRho: return "rho";
    }
    return "unknown";
}

ExperimentConfig with_sweep_value(const ExperimentConfig& base, Experiment experiment, double value) {
    ExperimentConfig c = base;
    switch (experiment) {
        case Experiment::VaryM: c.M = static_cast<int>(std::lround(value)); break;
        case Experiment::VaryLambda: c.lambda = value; break;
        case Experiment::VaryN: c.N = static_cast<std::size_t>(std::llround(value)); break;
        case Experiment::VaryRho: c.rho = value; break;
    }
    c.validate();
    return c;
}

SamplingScheme make_scheme(const ExperimentConfig& config) {
    if (config.scheme == "inclusive") return SamplingScheme::inclusive_grid(config.M, config.alpha);
    if (config.scheme == "interior") {
        const double span = config.grid_span == GridSpan::Unit ? 1.0 : config.alpha;
        return SamplingScheme::interior_grid(config.M, config.alpha, span);
    }
    throw std::domain_error("unknown scheme: " + config.scheme);
}

double MethodOutcome::mean_bits() const {
    if (bits_per_node.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t b : bits_per_node) total += static_cast<double>(b);
    return total / static_cast<double>(bits_per_node.size());
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::logic_error("invariant violated: " + what);
}

void require_nested(std::span<const PValueBatch> batches, std::span<const RejectionResult> rejections,
                    double tau_bh, const std::string& method) {
    for (std::size_t i = 0; i < batches.size(); ++i) {
        for (std::size_t j : rejections[i].rejected_indices) {
            require(batches[i].value(j) <= tau_bh, method + " rejects a p-value outside the BH set");
        }
    }
}

}  // namespace

TrialOutcome run_trial(const ExperimentConfig& config, std::uint64_t trial_index,
                       std::span<const MethodSpec> methods) {
    const TrialData data =
        config.rho > 0.0 ? generate_dependent_trial(config, trial_index) : generate_trial(config, trial_index);
    const std::span<const PValueBatch> batches = data.batches;
    const double alpha = config.alpha;

    TrialOutcome out;
    out.total_m = data.total_m;
    out.total_m0 = data.total_m0;
    out.total_m1 = data.total_m1;
    out.resamples = data.resamples;
    for (const auto& b : batches) out.node_sizes.push_back(b.size());

    const PValueBatch pooled = concatenate(batches);
    out.tau_bh = bh_procedure(pooled, alpha).threshold;

    const SamplingScheme scheme = make_scheme(config);
    const std::size_t samples = scheme.sample_count();

    for (const auto& spec : methods) {
        MethodOutcome mo;
        mo.method = spec;
        std::vector<RejectionResult> rejections;
        switch (spec.method) {
            case Method::PooledBH: {
                mo.threshold = out.tau_bh;
                for (const auto& b : batches) {
                    rejections.push_back(reject_at(b, out.tau_bh));
                    // Baseline I: forward every p-value below alpha plus the count.
                    const auto below = static_cast<std::size_t>(std::count_if(
                        b.values().begin(), b.values().end(), [alpha](double p) { return p <= alpha; }));
                    mo.bits_per_node.push_back(below * 64 + count_width_bits(b.size()));
                }
                break;
            }
            case Method::Bonferroni: {
                mo.threshold = std::numeric_limits<double>::quiet_NaN();
                for (const auto& b : batches) {
                    rejections.push_back(b.empty() ? RejectionResult{} : bonferroni_local(b, alpha, data.total_m));
                    mo.bits_per_node.push_back(0);
                }
                break;
            }
            case Method::SampleForward: {
                StarTranscript t = run_star(batches, scheme, alpha);
                mo.threshold = t.tau_hat;
                require(t.tau_hat <= out.tau_bh, "sample-forward threshold exceeds tau_BH");
                require(t.total_rejections() >= t.supporting_count,
                        "sample-forward rejections below m * tau / alpha");
                for (std::size_t i = 0; i < batches.size(); ++i) {
                    const std::size_t m_i = batches[i].size();
                    const std::size_t bound = m_i == 0 ? 1 : (samples + 1) * count_width_bits(m_i);
                    require(t.uplink_bits[i] <= bound, "uplink bits exceed (M+1) ceil(log2(m_i+1))");
                }
                require_nested(batches, t.per_node_rejections, out.tau_bh, "sample-forward");
                mo.bits_per_node = t.uplink_bits;
                rejections = std::move(t.per_node_rejections);
                break;
            }
            case Method::Qute: {
                Rng topo_rng(config.seed, Stream::Topology, trial_index);
                Graph g = make_topology(TopologySpec::parse(spec.topology), batches.size(), topo_rng);
                const NetworkGraph net(std::move(g), data.batches);
                QuteTranscript t = qute_run(net, scheme, alpha, config.hops);
                const std::size_t total = t.total_rejections();
                double largest = 0.0;
                for (std::size_t x = 0; x < net.node_count(); ++x) {
                    require(t.final_thresholds[x] <= out.tau_bh, "qute threshold exceeds tau_BH");
                    require(total >= t.final_support[x], "qute rejections below m * tau^(x) / alpha");
                    largest = std::max(largest, t.final_thresholds[x]);
                }
                require_nested(batches, t.per_node_rejections, out.tau_bh, mo.method.label());
                mo.threshold = largest;
                mo.bits_per_node = t.bits_sent_by_node();
                rejections = std::move(t.per_node_rejections);
                break;
            }
        }
        mo.metrics = metrics(batches, rejections);
        out.methods.push_back(std::move(mo));
    }
    return out;
}

namespace {

struct Moments {
    double mean = 0.0;
    double stderr_ = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    const auto n = static_cast<double>(xs.size());
    if (xs.empty()) return m;
    double sum = 0.0;
    for (double x : xs) sum += x;
    m.mean = sum / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return m;
}

}  // namespace

std::vector<SweepRow> summarize(std::span<const TrialOutcome> trials, double sweep_value) {
    std::vector<SweepRow> rows;
    if (trials.empty()) return rows;
    const std::size_t method_count = trials.front().methods.size();
    double m_sum = 0.0;
    double m0_sum = 0.0;
    for (const auto& t : trials) {
        m_sum += static_cast<double>(t.total_m);
        m0_sum += static_cast<double>(t.total_m0);
    }
    const auto n = static_cast<double>(trials.size());
    for (std::size_t k = 0; k < method_count; ++k) {
        std::vector<double> fdp;
        std::vector<double> tdp;
        std::vector<double> bits;
        for (const auto& t : trials) {
            const auto& mo = t.methods.at(k);
            fdp.push_back(mo.metrics.fdp);
            tdp.push_back(mo.metrics.tdp);
            bits.push_back(mo.mean_bits());
        }
        const Moments f = moments(fdp);
        const Moments p = moments(tdp);
        SweepRow row;
        row.method = trials.front().methods[k].method.label();
        row.sweep_value = sweep_value;
        row.trials = trials.size();
        row.fdr_hat = f.mean;
        row.fdr_stderr = f.stderr_;
        row.power_hat = p.mean;
        row.power_stderr = p.stderr_;
        row.mean_bits_per_node = moments(bits).mean;
        row.m_mean = m_sum / n;
        row.m0_mean = m0_sum / n;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<PairedGap> paired_gaps(std::span<const TrialOutcome> trials, double sweep_value) {
    std::vector<PairedGap> out;
    if (trials.empty()) return out;
    const auto& first = trials.front().methods;
    const auto reference = std::find_if(first.begin(), first.end(),
                                        [](const MethodOutcome& mo) { return mo.method.method == Method::PooledBH; });
    if (reference == first.end()) return out;
    const auto ref = static_cast<std::size_t>(reference - first.begin());
    for (std::size_t k = 0; k < first.size(); ++k) {
        if (k == ref) continue;
        std::vector<double> diff;
        diff.reserve(trials.size());
        for (const auto& t : trials) diff.push_back(t.methods[ref].metrics.tdp - t.methods[k].metrics.tdp);
        const Moments d = moments(diff);
        out.push_back({first[k].method.label(), sweep_value, d.mean, d.stderr_});
    }
    return out;
}

SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options) {
    SweepResult result;
    result.sweep_param = sweep_param_name(spec.experiment);
    unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    threads = std::max(1u, threads);

    for (double value : spec.sweep_values) {
        const ExperimentConfig config = with_sweep_value(spec.base, spec.experiment, value);
        std::vector<TrialOutcome> outcomes(config.trials);

        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        auto worker = [&]() {
            for (std::size_t i = next++; i < outcomes.size() && !failed; i = next++) {
                try {
                    outcomes[i] = run_trial(config, i, spec.methods);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        };
        if (threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (failure) std::rethrow_exception(failure);

        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].resamples == 0) continue;
            result.resampled_trials += outcomes[i].resamples;
            if (options.log) {
                *options.log << "resampled trial " << i << " at " << result.sweep_param << '=' << value << " ("
                             << outcomes[i].resamples << " empty draws)\n";
            }
        }
        auto rows = summarize(outcomes, value);
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
        auto gaps = paired_gaps(outcomes, value);
        result.paired.insert(result.paired.end(), gaps.begin(), gaps.end());
    }

    std::stable_sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.method != b.method ? a.method < b.method : a.sweep_value < b.sweep_value;
    });
    return result;
}

void write_csv(const SweepResult& result, std::ostream& out) {
    out << "method,sweep_param,sweep_value,trials,fdr_hat,fdr_stderr,power_hat,power_stderr,mean_bits_per_node\n";
    std::ostringstream line;
    line << std::setprecision(6);
    for (const auto& r : result.rows) {
        line.str("");
        line << r.method << ',' << result.sweep_param << ',' << r.sweep_value << ',' << r.trials << ','
             << r.fdr_hat << ',' << r.fdr_stderr << ',' << r.power_hat << ',' << r.power_stderr << ','
             << r.mean_bits_per_node << '\n';
        out << line.str();
    }
}

void emit_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(result, out);
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_paired_csv(const SweepResult& result, std::ostream& out) {
    out << "method,sweep_param,sweep_value,power_gap_vs_pooled_bh,gap_stderr\n";
    std::ostringstream line;
    line << std::setprecision(6);
    for (const auto& g : result.paired) {
        line.str("");
        line << g.method << ',' << result.sweep_param << ',' << g.sweep_value << ',' << g.power_gap << ','
             << g.gap_stderr << '\n';
        out << line.str();
    }
}

}  // namespace sfdr
