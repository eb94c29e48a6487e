#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace wow {

struct Edge {
    int u = 0;
    int v = 0;
    std::int64_t w = 1;

    auto operator<=>(const Edge&) const = default;
};

/// Weighted undirected graph on nodes 0..n-1. Edges are stored with u < v.
/// `source`/`sink` carry the query endpoints; `left_size` marks a bipartite
/// graph whose left side is 0..left_size-1.
struct GraphSpec {
    int n = 0;
    std::vector<Edge> edges;
    std::optional<int> source;
    std::optional<int> sink;
    std::optional<int> left_size;

    /// Throws SchemaError on self-loops, duplicate edges, reversed endpoints,
    /// out-of-range nodes or non-positive weights.
    void validate() const;

    std::optional<std::int64_t> weight(int u, int v) const;

    bool operator==(const GraphSpec&) const = default;
};

struct WeightedPath {
    std::int64_t weight = 0;
    std::vector<int> nodes;

    bool operator==(const WeightedPath&) const = default;
};

struct PathExtremes {
    WeightedPath shortest;
    WeightedPath longest;
    std::size_t path_count = 0;
};

bool is_connected(const GraphSpec& g);

/// Dijkstra. nullopt when `to` is unreachable.
std::optional<WeightedPath> shortest_path(const GraphSpec& g, int from, int to);

/// Exhaustive DFS over every simple path between the endpoints. Ties are
/// broken toward the lexicographically smallest node sequence.
std::optional<PathExtremes> enumerate_simple_paths(const GraphSpec& g, int from, int to);

/// Weight of an explicit node sequence; nullopt if a node is out of range,
/// a node repeats, or two consecutive nodes are not adjacent.
std::optional<std::int64_t> path_weight(const GraphSpec& g, std::span<const int> nodes);

/// Edmonds-Karp. Each undirected edge carries its weight as capacity in
/// both directions.
std::int64_t max_flow(const GraphSpec& g, int source, int sink);

/// Maximum bipartite matching size; `g.left_size` must be set.
int max_bipartite_matching(const GraphSpec& g);

}  // namespace wow
