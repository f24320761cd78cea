#include "sfdr/multihop_qute.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sfdr/star_protocol.hpp"

namespace sfdr {

std::size_t Graph::edge_count() const noexcept {
    std::size_t twice = 0;
    for (const auto& nb : adjacency_) twice += nb.size();
    return twice / 2;
}

void Graph::add_edge(std::size_t u, std::size_t v) {
    if (u >= node_count() || v >= node_count()) {
        throw std::domain_error("add_edge: vertex out of range");
    }
    if (u == v) {
        throw std::domain_error("add_edge: self-loops are not allowed");
    }
    auto insert_sorted = [](std::vector<std::size_t>& list, std::size_t x) {
        const auto it = std::lower_bound(list.begin(), list.end(), x);
        if (it == list.end() || *it != x) list.insert(it, x);
    };
    insert_sorted(adjacency_[u], v);
    insert_sorted(adjacency_[v], u);
}

bool Graph::has_edge(std::size_t u, std::size_t v) const {
    const auto& nb = adjacency_.at(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::size_t> Graph::ball(std::size_t u, int hops) const {
    if (u >= node_count()) throw std::domain_error("ball: vertex out of range");
    std::vector<int> dist(node_count(), -1);
    std::vector<std::size_t> frontier{u};
    dist[u] = 0;
    for (int d = 1; d <= hops && !frontier.empty(); ++d) {
        std::vector<std::size_t> next;
        for (std::size_t x : frontier) {
            for (std::size_t y : adjacency_[x]) {
                if (dist[y] < 0) {
                    dist[y] = d;
                    next.push_back(y);
                }
            }
        }
        frontier = std::move(next);
    }
    std::vector<std::size_t> out;
    for (std::size_t x = 0; x < node_count(); ++x) {
        if (dist[x] >= 0) out.push_back(x);
    }
    return out;
}

Graph Graph::read_edge_list(std::istream& in) {
    std::string line;
    long long n = -1;
    Graph g;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        if (n < 0) {
            if (!(fields >> n)) continue;  // blank line before the header
            if (n < 0) throw std::domain_error("edge list: negative node count");
            g = Graph(static_cast<std::size_t>(n));
            continue;
        }
        long long u = 0;
        long long v = 0;
        if (!(fields >> u)) continue;
        if (!(fields >> v) || u < 0 || v < 0) {
            throw std::domain_error("edge list: malformed edge on line " + std::to_string(line_no));
        }
        g.add_edge(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    }
    if (n < 0) throw std::domain_error("edge list: missing node count");
    return g;
}

void Graph::write_edge_list(std::ostream& out) const {
    out << node_count() << '\n';
    for (std::size_t u = 0; u < node_count(); ++u) {
        for (std::size_t v : adjacency_[u]) {
            if (u < v) out << u << ' ' << v << '\n';
        }
    }
}

Graph star_graph(std::size_t n) {
    Graph g(n);
    for (std::size_t v = 1; v < n; ++v) g.add_edge(0, v);
    return g;
}

Graph complete_graph(std::size_t n) {
    Graph g(n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v) g.add_edge(u, v);
    return g;
}

Graph path_graph(std::size_t n) {
    Graph g(n);
    for (std::size_t v = 1; v < n; ++v) g.add_edge(v - 1, v);
    return g;
}

Graph cycle_graph(std::size_t n) {
    Graph g = path_graph(n);
    if (n >= 3) g.add_edge(n - 1, 0);
    return g;
}

Graph erdos_renyi_graph(std::size_t n, double edge_probability, Rng& rng) {
    if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) {
        throw std::domain_error("erdos-renyi edge probability outside [0,1]");
    }
    Graph g(n);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (rng.bernoulli(edge_probability)) g.add_edge(u, v);
    return g;
}

TopologySpec TopologySpec::parse(std::string_view text) {
    if (text == "star") return {TopologyKind::Star, 0.0};
    if (text == "complete") return {TopologyKind::Complete, 0.0};
    if (text == "path") return {TopologyKind::Path, 0.0};
    if (text == "cycle") return {TopologyKind::Cycle, 0.0};
    constexpr std::string_view er = "erdos-renyi:";
    if (text.substr(0, er.size()) == er) {
        const std::string p_text(text.substr(er.size()));
        std::size_t used = 0;
        double p = 0.0;
        try {
            p = std::stod(p_text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != p_text.size() || !(p >= 0.0 && p <= 1.0)) {
            throw std::domain_error("bad erdos-renyi probability: " + p_text);
        }
        return {TopologyKind::ErdosRenyi, p};
    }
    throw std::domain_error("unknown topology: " + std::string(text));
}

std::string TopologySpec::label() const {
    switch (kind) {
        case TopologyKind::Star: return "star";
        case TopologyKind::Complete: return "complete";
        case TopologyKind::Path: return "path";
        case TopologyKind::Cycle: return "cycle";
        case TopologyKind::ErdosRenyi: {
            std::ostringstream os;
            os << "erdos-renyi:" << edge_probability;
            return os.str();
        }
    }
    return "unknown";
}

Graph make_topology(const TopologySpec& spec, std::size_t n, Rng& rng) {
    switch (spec.kind) {
        case TopologyKind::Star: return star_graph(n);
        case TopologyKind::Complete: return complete_graph(n);
        case TopologyKind::Path: return path_graph(n);
        case TopologyKind::Cycle: return cycle_graph(n);
        case TopologyKind::ErdosRenyi: return erdos_renyi_graph(n, spec.edge_probability, rng);
    }
    throw std::logic_error("make_topology: unhandled kind");
}

NetworkGraph::NetworkGraph(Graph topology, std::vector<PValueBatch> batches)
    : topology_(std::move(topology)), batches_(std::move(batches)) {
    if (topology_.node_count() != batches_.size()) {
        throw std::domain_error("NetworkGraph: one batch per vertex required");
    }
}

std::size_t NetworkGraph::total_m() const noexcept {
    std::size_t m = 0;
    for (const auto& b : batches_) m += b.size();
    return m;
}

std::size_t NetworkGraph::neighborhood_count(std::size_t a, int hops) const {
    std::size_t n = 0;
    for (std::size_t x : topology_.ball(a, hops)) n += batches_[x].size();
    return n;
}

std::size_t NeighborhoodView::p_value_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [origin, rec] : records) n += rec.m;
    return n;
}

std::vector<std::size_t> NeighborhoodView::origins() const {
    std::vector<std::size_t> out;
    out.reserve(records.size());
    for (const auto& [origin, rec] : records) out.push_back(origin);
    return out;
}

namespace {

void check_hops(int hops) {
    if (hops < 1) throw std::domain_error("hop count must be at least 1");
}

}  // namespace

QueryResult qute_query(const NetworkGraph& graph, std::span<const SamplingScheme> schemes, int hops) {
    check_hops(hops);
    const std::size_t n = graph.node_count();
    if (schemes.size() != n) {
        throw std::domain_error("qute_query: one sampling scheme per vertex required");
    }
    const auto& g = graph.topology();

    std::vector<SampledCdf> own;
    std::vector<std::size_t> record_bits;
    own.reserve(n);
    for (std::size_t x = 0; x < n; ++x) {
        own.push_back(sample_cdf(graph.batches()[x], schemes[x]));
        record_bits.push_back(encode(own.back()).payload_bits);
    }

    QueryResult out;
    out.views.resize(n);
    std::vector<std::vector<std::size_t>> frontier(n);
    for (std::size_t x = 0; x < n; ++x) {
        out.views[x].node = x;
        out.views[x].records.emplace(x, own[x]);
        frontier[x] = {x};
    }

    // Round r forwards the records each vertex learned in round r-1. All
    // sends of a round are computed from the state at the start of the round.
    for (int round = 1; round <= hops; ++round) {
        std::vector<std::vector<std::size_t>> next(n);
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t y : g.neighbors(x)) {
                for (std::size_t origin : frontier[x]) {
                    if (origin == y) continue;
                    out.traffic[{x, y}].query_bits += record_bits[origin];
                    if (out.views[y].records.emplace(origin, own[origin]).second) {
                        next[y].push_back(origin);
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    return out;
}

QueryResult qute_query(const NetworkGraph& graph, const SamplingScheme& scheme, int hops) {
    std::vector<SamplingScheme> schemes(graph.node_count(), scheme);
    return qute_query(graph, schemes, hops);
}

LocalTest qute_test(const NeighborhoodView& view, std::size_t global_m, double alpha) {
    check_alpha(alpha);
    LocalTest out;
    out.neighborhood_m = view.p_value_count();
    if (global_m < out.neighborhood_m) {
        throw std::domain_error("qute_test: global m below neighborhood count");
    }
    if (out.neighborhood_m == 0) return out;

    out.level = step_up_line(alpha, out.neighborhood_m, global_m);
    std::vector<SampledCdf> members;
    members.reserve(view.records.size());
    for (const auto& [origin, rec] : view.records) members.push_back(rec);
    const PooledCdf pooled = pool(members);
    // Line at size n*alpha/m over the neighborhood staircase K/n is alpha*K/m.
    const ThresholdResult th = solve_threshold(pooled, alpha, global_m);
    out.tau = th.tau;
    out.supporting_count = th.supporting_count;
    return out;
}

std::size_t QuteTranscript::total_rejections() const noexcept {
    std::size_t r = 0;
    for (const auto& rej : per_node_rejections) r += rej.rejection_count();
    return r;
}

std::vector<std::size_t> QuteTranscript::bits_sent_by_node() const {
    std::vector<std::size_t> out(local.size(), 0);
    for (const auto& [edge, t] : traffic) out.at(edge.first) += t.query_bits + t.exchange_bits;
    return out;
}

QuteTranscript qute_exchange_and_decide(const NetworkGraph& graph, std::span<const LocalTest> local_tests,
                                        int hops) {
    check_hops(hops);
    const std::size_t n = graph.node_count();
    if (local_tests.size() != n) {
        throw std::domain_error("qute_exchange_and_decide: one local threshold per vertex required");
    }
    const auto& g = graph.topology();

    QuteTranscript out;
    out.local.assign(local_tests.begin(), local_tests.end());
    std::vector<double> best(n);
    std::vector<std::size_t> support(n);
    for (std::size_t x = 0; x < n; ++x) {
        out.local_thresholds.push_back(local_tests[x].tau);
        best[x] = local_tests[x].tau;
        support[x] = local_tests[x].supporting_count;
    }

    for (int round = 1; round <= hops; ++round) {
        auto next_best = best;
        auto next_support = support;
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t y : g.neighbors(x)) {
                out.traffic[{x, y}].exchange_bits += kThresholdBits;
                if (best[x] > next_best[y] || (best[x] == next_best[y] && support[x] > next_support[y])) {
                    next_best[y] = best[x];
                    next_support[y] = support[x];
                }
            }
        }
        best = std::move(next_best);
        support = std::move(next_support);
    }

    out.final_thresholds = best;
    out.final_support = support;
    out.per_node_rejections.reserve(n);
    for (std::size_t x = 0; x < n; ++x) {
        out.per_node_rejections.push_back(reject_at(graph.batches()[x], best[x]));
    }
    return out;
}

QuteTranscript qute_run(const NetworkGraph& graph, std::span<const SamplingScheme> schemes, double alpha,
                        int hops) {
    check_alpha(alpha);
    QueryResult query = qute_query(graph, schemes, hops);
    const std::size_t m = graph.total_m();
    std::vector<LocalTest> tests;
    tests.reserve(graph.node_count());
    for (const auto& view : query.views) tests.push_back(qute_test(view, m, alpha));

    QuteTranscript out = qute_exchange_and_decide(graph, tests, hops);
    for (const auto& [edge, t] : query.traffic) out.traffic[edge].query_bits += t.query_bits;
    return out;
}

QuteTranscript qute_run(const NetworkGraph& graph, const SamplingScheme& scheme, double alpha, int hops) {
    std::vector<SamplingScheme> schemes(graph.node_count(), scheme);
    return qute_run(graph, schemes, alpha, hops);
}

}  // namespace sfdr
