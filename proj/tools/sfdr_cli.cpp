// sfdr: command-line front end for the sample-and-forward FDR simulator.
//
//   sfdr bh     [config flags]            pooled BH on one generated trial
//   sfdr star   [config flags] [--trace]  star-network sample-and-forward
//   sfdr qute   [config flags] [--trace]  QuTE sample-and-forward on a graph
//   sfdr sweep  --experiment 1..4 [...]   Monte Carlo sweep, CSV output
//   sfdr oracle --pi0 --mu [...]          asymptotic thresholds for a Gaussian mixture

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfdr/cdf_sampling.hpp"
#include "sfdr/core_stats.hpp"
#include "sfdr/datagen.hpp"
#include "sfdr/experiments.hpp"
#include "sfdr/multihop_qute.hpp"
#include "sfdr/star_protocol.hpp"
#include "sfdr/theory_oracle.hpp"

namespace {

using sfdr::ExperimentConfig;

// Flags that map one-to-one onto config keys. Applied after --config.
const std::vector<std::pair<std::string, std::string>> kConfigFlags = {
    {"--seed", "seed"},   {"--trials", "trials"}, {"--alpha", "alpha"},       {"--M", "M"},
    {"--lambda", "lambda"}, {"--N", "N"},         {"--rho", "rho"},           {"--scheme", "scheme"},
    {"--topology", "topology"}, {"--hops", "hops"}, {"--grid-span", "grid_span"}, {"--mu-draw", "mu_draw"},
    {"--dependence-scope", "dependence_scope"},
};

struct CommonArgs {
    std::string config_path;
    std::map<std::string, std::string> overrides;
    std::string out;
    bool trace = false;
    std::uint64_t trial = 0;
    std::string input;
    std::string graph_path;

    void attach(CLI::App* app, bool with_trace) {
        app->add_option("--config", config_path, "Key-value config file")->check(CLI::ExistingFile);
        for (const auto& [flag, key] : kConfigFlags) {
            app->add_option(flag, overrides[key], "Override config key '" + key + "'");
        }
        app->add_option("--out", out, "Output file (default: stdout)");
        if (with_trace) {
            app->add_flag("--trace", trace, "Print one line per message");
            app->add_option("--trial", trial, "Trial index to generate");
            app->add_option("--input", input, "P-values as 'node p-value' lines instead of generated data");
        }
    }

    ExperimentConfig resolve(const CLI::App* app) const {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = sfdr::load_config(config_path, cfg);
        for (const auto& [flag, key] : kConfigFlags) {
            if (app->count(flag) > 0) sfdr::apply_setting(cfg, key, overrides.at(key));
        }
        cfg.validate();
        return cfg;
    }
};

std::vector<sfdr::PValueBatch> read_batches(const std::string& path, std::size_t& node_count) {
    std::ifstream in(path);
    if (!in) throw std::domain_error("cannot open " + path);
    std::map<long long, std::vector<double>> by_node;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        long long node = 0;
        double p = 0.0;
        if (!(fields >> node)) continue;
        if (!(fields >> p) || node < 0) throw std::domain_error("bad p-value line: " + line);
        by_node[node].push_back(p);
    }
    std::size_t n = by_node.empty() ? 0 : static_cast<std::size_t>(by_node.rbegin()->first) + 1;
    n = std::max(n, node_count);
    std::vector<sfdr::PValueBatch> batches;
    for (std::size_t i = 0; i < n; ++i) {
        auto it = by_node.find(static_cast<long long>(i));
        batches.push_back(sfdr::PValueBatch::unlabeled(static_cast<int>(i),
                                                       it == by_node.end() ? std::vector<double>{} : it->second));
    }
    node_count = n;
    return batches;
}

std::vector<sfdr::PValueBatch> trial_batches(const CommonArgs& args, ExperimentConfig& cfg, bool& labeled) {
    if (!args.input.empty()) {
        labeled = false;
        std::size_t n = 0;
        auto batches = read_batches(args.input, n);
        cfg.N = n;
        return batches;
    }
    labeled = true;
    return (cfg.rho > 0.0 ? sfdr::generate_dependent_trial(cfg, args.trial) : sfdr::generate_trial(cfg, args.trial))
        .batches;
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open " + path + " for writing");
        }
    }
    std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

void print_metrics(std::ostream& os, std::span<const sfdr::PValueBatch> batches,
                   std::span<const sfdr::RejectionResult> rejections, bool labeled) {
    const auto em = sfdr::metrics(batches, rejections);
    os << "rejections " << em.total_rejections << '\n';
    if (labeled) os << "fdp " << em.fdp << "\ntdp " << em.tdp << '\n';
}

int run_bh(const CommonArgs& args, const CLI::App* app) {
    ExperimentConfig cfg = args.resolve(app);
    bool labeled = false;
    const auto batches = trial_batches(args, cfg, labeled);
    const auto pooled = sfdr::concatenate(batches);
    Output out(args.out);
    auto& os = out.get();
    os << std::setprecision(10);
    os << "m " << pooled.size() << "\nalpha " << cfg.alpha << '\n';
    const auto result = sfdr::bh_procedure(pooled, cfg.alpha);
    os << "tau_bh " << result.threshold << '\n';
    std::vector<sfdr::RejectionResult> per_node;
    for (const auto& b : batches) per_node.push_back(sfdr::reject_at(b, result.threshold));
    print_metrics(os, batches, per_node, labeled);
    return 0;
}

int run_star_cmd(const CommonArgs& args, const CLI::App* app) {
    ExperimentConfig cfg = args.resolve(app);
    bool labeled = false;
    const auto batches = trial_batches(args, cfg, labeled);
    const auto scheme = sfdr::make_scheme(cfg);
    const auto t = sfdr::run_star(batches, scheme, cfg.alpha);
    Output out(args.out);
    auto& os = out.get();
    if (args.trace) sfdr::write_trace(os, t);
    os << std::setprecision(10);
    std::size_t up = 0;
    for (auto b : t.uplink_bits) up += b;
    const auto pooled = sfdr::concatenate(batches);
    os << "m " << pooled.size() << "\nM " << scheme.sample_count() << "\ntau_hat " << t.tau_hat << "\ntau_bh "
       << sfdr::bh_procedure(pooled, cfg.alpha).threshold << "\nuplink_bits " << up << "\ndownlink_bits "
       << t.downlink_bits << '\n';
    print_metrics(os, batches, t.per_node_rejections, labeled);
    return 0;
}

int run_qute_cmd(const CommonArgs& args, const CLI::App* app) {
    ExperimentConfig cfg = args.resolve(app);
    bool labeled = false;
    sfdr::Graph graph;
    if (!args.graph_path.empty()) {
        std::ifstream gin(args.graph_path);
        if (!gin) throw std::domain_error("cannot open " + args.graph_path);
        graph = sfdr::Graph::read_edge_list(gin);
        if (args.input.empty()) cfg.N = graph.node_count();
    }
    auto batches = trial_batches(args, cfg, labeled);
    if (args.graph_path.empty()) {
        sfdr::Rng rng(cfg.seed, sfdr::Stream::Topology, args.trial);
        graph = sfdr::make_topology(sfdr::TopologySpec::parse(cfg.topology), batches.size(), rng);
    }
    if (graph.node_count() != batches.size()) {
        throw std::domain_error("graph has " + std::to_string(graph.node_count()) + " nodes but data has " +
                                std::to_string(batches.size()));
    }
    const sfdr::NetworkGraph net(std::move(graph), batches);
    const auto t = sfdr::qute_run(net, sfdr::make_scheme(cfg), cfg.alpha, cfg.hops);
    Output out(args.out);
    auto& os = out.get();
    os << std::setprecision(10);
    if (args.trace) {
        for (const auto& [edge, traffic] : t.traffic) {
            if (traffic.query_bits) os << "query from=" << edge.first << " to=" << edge.second << " bits=" << traffic.query_bits << '\n';
        }
        for (const auto& [edge, traffic] : t.traffic) {
            if (traffic.exchange_bits) os << "exchange from=" << edge.first << " to=" << edge.second << " bits=" << traffic.exchange_bits << '\n';
        }
        for (std::size_t x = 0; x < net.node_count(); ++x) {
            os << "node " << x << " n=" << t.local[x].neighborhood_m << " tau0=" << t.local_thresholds[x]
               << " tau=" << t.final_thresholds[x] << " rejections=" << t.per_node_rejections[x].rejection_count()
               << '\n';
        }
    }
    std::size_t bits = 0;
    for (auto b : t.bits_sent_by_node()) bits += b;
    os << "m " << net.total_m() << "\nnodes " << net.node_count() << "\nedges " << net.topology().edge_count()
       << "\nhops " << cfg.hops << "\ntotal_bits " << bits << '\n';
    print_metrics(os, batches, t.per_node_rejections, labeled);
    return 0;
}

int run_sweep_cmd(const CommonArgs& args, const CLI::App* app, int experiment, const std::vector<std::string>& methods,
                  const std::string& paired_out, unsigned threads) {
    // Experiment defaults first, then file and flags on top.
    sfdr::SweepSpec spec = sfdr::SweepSpec::preset(static_cast<sfdr::Experiment>(experiment));
    ExperimentConfig cfg = spec.base;
    if (!args.config_path.empty()) cfg = sfdr::load_config(args.config_path, cfg);
    for (const auto& [flag, key] : kConfigFlags) {
        if (app->count(flag) > 0) sfdr::apply_setting(cfg, key, args.overrides.at(key));
    }
    spec.base = cfg;
    if (!methods.empty()) {
        spec.methods.clear();
        for (const auto& m : methods) spec.methods.push_back(sfdr::MethodSpec::parse(m));
    }
    sfdr::RunOptions options;
    options.threads = threads;
    options.log = &std::cerr;
    const auto result = sfdr::run_sweep(spec, options);
    if (args.out.empty()) {
        sfdr::write_csv(result, std::cout);
    } else {
        sfdr::emit_csv(result, args.out);
    }
    if (!paired_out.empty()) {
        std::ofstream p(paired_out);
        if (!p) throw std::runtime_error("cannot open " + paired_out + " for writing");
        sfdr::write_paired_csv(result, p);
    }
    return 0;
}

int run_oracle(double pi0, double mu, double alpha, int samples, const std::string& scheme_name) {
    const auto model = sfdr::gaussian_two_sided_mixture(pi0, mu);
    const auto scheme = scheme_name == "interior" ? sfdr::SamplingScheme::interior_grid(samples, alpha)
                                                  : sfdr::SamplingScheme::inclusive_grid(samples, alpha);
    const auto r = sfdr::limiting_threshold(model, alpha, scheme);
    std::cout << std::setprecision(10) << "tau_star " << r.tau_star << '\n';
    if (r.degenerate) {
        std::cout << "degenerate 1\ntau_bar 0\n";
        return 0;
    }
    std::cout << "j_star " << r.j_star + 1 << "\nt_j_star " << r.grid_below << "\nt_j_star_next " << r.grid_above
              << "\ntau_bar " << r.tau_bar << "\nlipschitz " << r.lipschitz << "\npower_gap_bound "
              << r.power_gap_bound << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-and-forward FDR control simulator"};
    app.require_subcommand(1);

    CommonArgs bh_args;
    CommonArgs star_args;
    CommonArgs qute_args;
    CommonArgs sweep_args;

    auto* bh = app.add_subcommand("bh", "Pooled Benjamini-Hochberg on one trial");
    bh_args.attach(bh, true);

    auto* star = app.add_subcommand("star", "Star-network sample-and-forward on one trial");
    star_args.attach(star, true);

    auto* qute = app.add_subcommand("qute", "Sample-and-forward QuTE on one trial");
    qute_args.attach(qute, true);
    qute->add_option("--graph", qute_args.graph_path, "Edge list file (N, then 'u v' lines)")
        ->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep reproducing one experiment");
    sweep_args.attach(sweep, false);
    int experiment = 1;
    std::vector<std::string> methods;
    std::string paired_out;
    unsigned threads = 0;
    sweep->add_option("--experiment", experiment, "1: vary M, 2: vary lambda, 3: vary N, 4: vary rho")
        ->check(CLI::Range(1, 4));
    sweep->add_option("--methods", methods, "sample-forward, pooled-bh, bonferroni, qute:<topology>")
        ->delimiter(',');
    sweep->add_option("--paired-out", paired_out, "CSV of paired power gaps against pooled BH");
    sweep->add_option("--threads", threads, "Worker threads (0: all cores)");

    auto* oracle = app.add_subcommand("oracle", "Asymptotic thresholds for a two-sided Gaussian mixture");
    double pi0 = 0.8;
    double mu = 2.0;
    double alpha = 0.2;
    int samples = 3;
    std::string scheme = "inclusive";
    oracle->add_option("--pi0", pi0, "Null proportion");
    oracle->add_option("--mu", mu, "Alternative mean");
    oracle->add_option("--alpha", alpha, "Target FDR level");
    oracle->add_option("--M", samples, "Samples per node");
    oracle->add_option("--scheme", scheme, "inclusive | interior");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bh) return run_bh(bh_args, bh);
        if (*star) return run_star_cmd(star_args, star);
        if (*qute) return run_qute_cmd(qute_args, qute);
        if (*sweep) return run_sweep_cmd(sweep_args, sweep, experiment, methods, paired_out, threads);
        if (*oracle) return run_oracle(pi0, mu, alpha, samples, scheme);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
