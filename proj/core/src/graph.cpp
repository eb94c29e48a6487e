#include "wow/graph.hpp"

#include "wow/errors.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <string>

namespace wow {

void GraphSpec::validate() const {
    if (n < 1) throw SchemaError("graph must have at least one node");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges) {
        if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n)
            throw SchemaError("edge endpoint out of range");
        if (e.u == e.v) throw SchemaError("self-loop on node " + std::to_string(e.u));
        if (e.u > e.v) throw SchemaError("edge endpoints must satisfy u < v");
        if (e.w < 1) throw SchemaError("edge weights must be positive integers");
        if (!seen.emplace(e.u, e.v).second)
            throw SchemaError("duplicate edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
    }
    if (source && (*source < 0 || *source >= n)) throw SchemaError("source out of range");
    if (sink && (*sink < 0 || *sink >= n)) throw SchemaError("sink out of range");
    if (left_size) {
        if (*left_size < 1 || *left_size >= n) throw SchemaError("left_size out of range");
        for (const auto& e : edges)
            if (e.u >= *left_size || e.v < *left_size)
                throw SchemaError("bipartite edge must join left and right sides");
    }
}

std::optional<std::int64_t> GraphSpec::weight(int a, int b) const {
    const int lo = std::min(a, b);
    const int hi = std::max(a, b);
    for (const auto& e : edges)
        if (e.u == lo && e.v == hi) return e.w;
    return std::nullopt;
}

namespace {

using Adjacency = std::vector<std::vector<std::pair<int, std::int64_t>>>;

Adjacency adjacency(const GraphSpec& g) {
    Adjacency adj(static_cast<std::size_t>(g.n));
    for (const auto& e : g.edges) {
        adj[e.u].emplace_back(e.v, e.w);
        adj[e.v].emplace_back(e.u, e.w);
    }
    for (auto& row : adj) std::sort(row.begin(), row.end());
    return adj;
}

}  // namespace

bool is_connected(const GraphSpec& g) {
    if (g.n <= 1) return true;
    const auto adj = adjacency(g);
    std::vector<char> seen(g.n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& [v, w] : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == g.n;
}

std::optional<WeightedPath> shortest_path(const GraphSpec& g, int from, int to) {
    constexpr auto kInf = std::numeric_limits<std::int64_t>::max();
    const auto adj = adjacency(g);
    std::vector<std::int64_t> dist(g.n, kInf);
    std::vector<int> prev(g.n, -1);
    using Item = std::pair<std::int64_t, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[from] = 0;
    pq.emplace(0, from);
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d != dist[u]) continue;
        for (const auto& [v, w] : adj[u]) {
            if (d + w < dist[v]) {
                dist[v] = d + w;
                prev[v] = u;
                pq.emplace(dist[v], v);
            }
        }
    }
    if (dist[to] == kInf) return std::nullopt;
    WeightedPath out;
    out.weight = dist[to];
    for (int v = to; v != -1; v = prev[v]) out.nodes.push_back(v);
    std::reverse(out.nodes.begin(), out.nodes.end());
    return out;
}

namespace {

struct PathSearch {
    const Adjacency& adj;
    int target;
    std::vector<int> path;
    std::vector<char> on_path;
    std::int64_t weight = 0;
    std::optional<PathExtremes> best;

    void visit(int u) {
        if (u == target) {
            record();
            return;
        }
        for (const auto& [v, w] : adj[u]) {
            if (on_path[v]) continue;
            on_path[v] = 1;
            path.push_back(v);
            weight += w;
            visit(v);
            weight -= w;
            path.pop_back();
            on_path[v] = 0;
        }
    }

    void record() {
        if (!best) {
            best = PathExtremes{{weight, path}, {weight, path}, 1};
            return;
        }
        ++best->path_count;
        auto& lo = best->shortest;
        if (weight < lo.weight || (weight == lo.weight && path < lo.nodes)) lo = {weight, path};
        auto& hi = best->longest;
        if (weight > hi.weight || (weight == hi.weight && path < hi.nodes)) hi = {weight, path};
    }
};

}  // namespace

std::optional<PathExtremes> enumerate_simple_paths(const GraphSpec& g, int from, int to) {
    const auto adj = adjacency(g);
    PathSearch search{adj, to, {from}, std::vector<char>(g.n, 0), 0, std::nullopt};
    search.on_path[from] = 1;
    search.visit(from);
    return search.best;
}

std::optional<std::int64_t> path_weight(const GraphSpec& g, std::span<const int> nodes) {
    if (nodes.empty()) return std::nullopt;
    std::vector<char> seen(g.n, 0);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const int v = nodes[i];
        if (v < 0 || v >= g.n || seen[v]) return std::nullopt;
        seen[v] = 1;
        if (i > 0) {
            const auto w = g.weight(nodes[i - 1], v);
            if (!w) return std::nullopt;
            total += *w;
        }
    }
    return total;
}

std::int64_t max_flow(const GraphSpec& g, int source, int sink) {
    if (source == sink) throw SchemaError("max flow requires source != sink");
    const auto n = static_cast<std::size_t>(g.n);
    std::vector<std::vector<std::int64_t>> residual(n, std::vector<std::int64_t>(n, 0));
    for (const auto& e : g.edges) {
        residual[e.u][e.v] += e.w;
        residual[e.v][e.u] += e.w;
    }
    std::int64_t flow = 0;
    while (true) {
        std::vector<int> parent(n, -1);
        parent[source] = source;
        std::queue<int> q;
        q.push(source);
        while (!q.empty() && parent[sink] == -1) {
            const int u = q.front();
            q.pop();
            for (std::size_t v = 0; v < n; ++v) {
                if (parent[v] == -1 && residual[u][v] > 0) {
                    parent[v] = u;
                    q.push(static_cast<int>(v));
                }
            }
        }
        if (parent[sink] == -1) break;
        std::int64_t push = std::numeric_limits<std::int64_t>::max();
        for (int v = sink; v != source; v = parent[v]) push = std::min(push, residual[parent[v]][v]);
        for (int v = sink; v != source; v = parent[v]) {
            residual[parent[v]][v] -= push;
            residual[v][parent[v]] += push;
        }
        flow += push;
    }
    return flow;
}

int max_bipartite_matching(const GraphSpec& g) {
    if (!g.left_size) throw SchemaError("matching requires a bipartite graph (left_size)");
    const int left = *g.left_size;
    const int right = g.n - left;
    std::vector<std::vector<int>> adj(left);
    for (const auto& e : g.edges) adj[e.u].push_back(e.v - left);
    for (auto& row : adj) std::sort(row.begin(), row.end());

    std::vector<int> match_right(right, -1);
    std::vector<char> visited;
    auto augment = [&](auto&& self, int u) -> bool {
        for (int r : adj[u]) {
            if (visited[r]) continue;
            visited[r] = 1;
            if (match_right[r] == -1 || self(self, match_right[r])) {
                match_right[r] = u;
                return true;
            }
        }
        return false;
    };
    int size = 0;
    for (int u = 0; u < left; ++u) {
        visited.assign(right, 0);
        if (augment(augment, u)) ++size;
    }
    return size;
}

}  // namespace wow
