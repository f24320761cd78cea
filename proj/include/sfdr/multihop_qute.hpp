#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sfdr/cdf_sampling.hpp"
#include "sfdr/core_stats.hpp"
#include "sfdr/rng.hpp"

namespace sfdr {

/// Undirected simple graph on vertices 0..n-1.
class Graph {
public:
    explicit Graph(std::size_t node_count = 0) : adjacency_(node_count) {}

    std::size_t node_count() const noexcept { return adjacency_.size(); }
    std::size_t edge_count() const noexcept;

    /// Idempotent. Throws std::domain_error on self-loops or unknown vertices.
    void add_edge(std::size_t u, std::size_t v);
    bool has_edge(std::size_t u, std::size_t v) const;

    /// Sorted neighbor list.
    std::span<const std::size_t> neighbors(std::size_t u) const { return adjacency_.at(u); }

    /// Vertices within `hops` edges of u (u included), sorted.
    std::vector<std::size_t> ball(std::size_t u, int hops) const;

    /// Plain-text edge list: N on the first line, then "u v" pairs, 0-indexed.
    static Graph read_edge_list(std::istream& in);
    void write_edge_list(std::ostream& out) const;

private:
    std::vector<std::vector<std::size_t>> adjacency_;
};

Graph star_graph(std::size_t n);  // vertex 0 is the hub
Graph complete_graph(std::size_t n);
Graph path_graph(std::size_t n);
Graph cycle_graph(std::size_t n);
Graph erdos_renyi_graph(std::size_t n, double edge_probability, Rng& rng);

enum class TopologyKind { Star, Complete, Path, Cycle, ErdosRenyi };

struct TopologySpec {
    TopologyKind kind = TopologyKind::Star;
    double edge_probability = 0.0;

    /// Accepts star | complete | path | cycle | erdos-renyi:<p>.
    static TopologySpec parse(std::string_view text);
    std::string label() const;
};

Graph make_topology(const TopologySpec& spec, std::size_t n, Rng& rng);

/// Topology plus the batch held at each vertex.
class NetworkGraph {
public:
    NetworkGraph(Graph topology, std::vector<PValueBatch> batches);

    const Graph& topology() const noexcept { return topology_; }
    std::span<const PValueBatch> batches() const noexcept { return batches_; }
    std::size_t node_count() const noexcept { return batches_.size(); }
    std::size_t total_m() const noexcept;

    /// P-values held within `hops` edges of a (n^(a) for hops = 1).
    std::size_t neighborhood_count(std::size_t a, int hops = 1) const;

private:
    Graph topology_;
    std::vector<PValueBatch> batches_;
};

/// What one vertex knows after the query phase: sampled CDFs keyed by origin
/// vertex. Each origin appears once no matter how many paths delivered it.
struct NeighborhoodView {
    std::size_t node = 0;
    std::map<std::size_t, SampledCdf> records;

    std::size_t p_value_count() const noexcept;
    std::vector<std::size_t> origins() const;
};

struct EdgeTraffic {
    std::size_t query_bits = 0;
    std::size_t exchange_bits = 0;
};

/// Keyed by directed edge (sender, receiver).
using TrafficLog = std::map<std::pair<std::size_t, std::size_t>, EdgeTraffic>;

struct QueryResult {
    std::vector<NeighborhoodView> views;
    TrafficLog traffic;
};

/// Query phase with `hops` rounds of record forwarding.
QueryResult qute_query(const NetworkGraph& graph, const SamplingScheme& scheme, int hops = 1);
QueryResult qute_query(const NetworkGraph& graph, std::span<const SamplingScheme> schemes, int hops = 1);

struct LocalTest {
    double tau = 0.0;
    std::size_t supporting_count = 0;
    std::size_t neighborhood_m = 0;
    double level = 0.0;  // alpha^(x) = n^(x) * alpha / m
};

/// Pool the view and run the threshold search at size n^(x) * alpha / m.
LocalTest qute_test(const NeighborhoodView& view, std::size_t global_m, double alpha);

struct QuteTranscript {
    std::vector<LocalTest> local;
    std::vector<double> local_thresholds;
    std::vector<double> final_thresholds;
    /// Supporting count behind each final threshold (max over the ball).
    std::vector<std::size_t> final_support;
    std::vector<RejectionResult> per_node_rejections;
    TrafficLog traffic;

    std::size_t total_rejections() const noexcept;
    /// Query plus exchange bits sent by each vertex.
    std::vector<std::size_t> bits_sent_by_node() const;
};

/// Exchange phase: `hops` rounds of max-forwarding, then local rejection.
QuteTranscript qute_exchange_and_decide(const NetworkGraph& graph, std::span<const LocalTest> local_tests,
                                        int hops = 1);

QuteTranscript qute_run(const NetworkGraph& graph, const SamplingScheme& scheme, double alpha, int hops = 1);
QuteTranscript qute_run(const NetworkGraph& graph, std::span<const SamplingScheme> schemes, double alpha,
                        int hops = 1);

}  // namespace sfdr
