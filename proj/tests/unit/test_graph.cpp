#include "oracles.hpp"

#include "wow/corpus.hpp"
#include "wow/errors.hpp"
#include "wow/graph.hpp"
#include "wow/rng.hpp"

#include <doctest.h>

using namespace wow;

TEST_CASE("worked example: shortest path, longest simple path, witness") {
    const auto g = oracle::example_graph();
    const auto best = shortest_path(g, 0, 4);
    REQUIRE(best);
    CHECK(best->weight == 4);
    CHECK(best->nodes == std::vector<int>{0, 3, 4});

    const auto ex = enumerate_simple_paths(g, 0, 4);
    REQUIRE(ex);
    const auto all = oracle::all_simple_path_weights(g, 0, 4);
    CHECK(ex->path_count == all.size());
    CHECK(ex->longest.weight == *std::max_element(all.begin(), all.end()));
    // Frozen from the permutation oracle.
    CHECK(ex->longest.weight == 15);
    CHECK(ex->shortest.weight == 4);
}

TEST_CASE("two nodes, one edge") {
    GraphSpec g;
    g.n = 2;
    g.edges = {{0, 1, 7}};
    g.source = 0;
    g.sink = 1;
    const auto task = make_shortest_path_task("tiny", g);
    const auto& pv = std::get<PathValue>(task.ground_truth);
    CHECK(pv.w_gt == 7);
    CHECK(pv.w_worst == 7);
    CHECK(pv.witness == std::vector<int>{0, 1});

    GraphSpec f;
    f.n = 2;
    f.edges = {{0, 1, 5}};
    f.source = 0;
    f.sink = 1;
    CHECK(max_flow(f, 0, 1) == 5);
    CHECK(std::get<ScalarValue>(make_maxflow_task("f", f).ground_truth).value == 5.0);
}

TEST_CASE("path_weight rejects incoherent paths") {
    const auto g = oracle::example_graph();
    const std::vector<int> ok{0, 2, 3, 4};
    CHECK(path_weight(g, ok) == 6);
    const std::vector<int> repeat{0, 3, 0, 4};
    CHECK_FALSE(path_weight(g, repeat));
    const std::vector<int> missing_edge{0, 4};
    CHECK_FALSE(path_weight(g, missing_edge));
    const std::vector<int> out_of_range{0, 9};
    CHECK_FALSE(path_weight(g, out_of_range));
}

TEST_CASE("graph validation") {
    GraphSpec g;
    g.n = 3;
    g.edges = {{0, 0, 1}};
    CHECK_THROWS_AS(g.validate(), SchemaError);
    g.edges = {{1, 0, 1}};
    CHECK_THROWS_AS(g.validate(), SchemaError);
    g.edges = {{0, 1, 1}, {0, 1, 2}};
    CHECK_THROWS_AS(g.validate(), SchemaError);
    g.edges = {{0, 1, 0}};
    CHECK_THROWS_AS(g.validate(), SchemaError);
    g.edges = {{0, 1, 1}, {1, 2, 3}};
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("solvers agree with brute force on random graphs") {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Rng rng(seed);
        GraphSpec g;
        g.n = 3 + static_cast<int>(rng.below(6));  // 3..8
        for (int u = 0; u < g.n; ++u)
            for (int v = u + 1; v < g.n; ++v)
                if (rng.bernoulli(0.5)) g.edges.push_back({u, v, rng.uniform_int(1, 9)});
        const int s = 0, t = g.n - 1;
        const auto weights = oracle::all_simple_path_weights(g, s, t);
        const auto sp = shortest_path(g, s, t);
        const auto ex = enumerate_simple_paths(g, s, t);
        CAPTURE(seed);
        if (weights.empty()) {
            CHECK_FALSE(sp);
            CHECK_FALSE(ex);
        } else {
            REQUIRE(sp);
            REQUIRE(ex);
            CHECK(sp->weight == *std::min_element(weights.begin(), weights.end()));
            CHECK(ex->longest.weight == *std::max_element(weights.begin(), weights.end()));
            CHECK(path_weight(g, sp->nodes) == sp->weight);
            CHECK(path_weight(g, ex->longest.nodes) == ex->longest.weight);
        }
        CHECK(max_flow(g, s, t) == oracle::min_cut(g, s, t));
    }
}

TEST_CASE("max flow equals brute-force integer flow enumeration on small networks") {
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        Rng rng(seed * 31);
        GraphSpec g;
        g.n = 4;
        for (int u = 0; u < g.n; ++u)
            for (int v = u + 1; v < g.n; ++v)
                if (g.edges.size() < 5 && rng.bernoulli(0.7)) g.edges.push_back({u, v, rng.uniform_int(1, 3)});
        CAPTURE(seed);
        CHECK(max_flow(g, 0, 3) == oracle::brute_force_flow(g, 0, 3));
    }
}

TEST_CASE("bipartite matching") {
    SUBCASE("planted perfect matching") {
        for (int k = 1; k <= 6; ++k) {
            GraphSpec g;
            g.n = 2 * k;
            g.left_size = k;
            for (int a = 0; a < k; ++a) g.edges.push_back({a, k + (a + 2) % k, 1});
            CHECK(max_bipartite_matching(g) == k);
        }
    }
    SUBCASE("random graphs against brute force") {
        for (std::uint64_t seed = 1; seed <= 200; ++seed) {
            const auto task = generate_matching_task({1 + static_cast<int>(seed % 6), 1 + static_cast<int>((seed / 6) % 6),
                                                      0.4, seed, 200});
            CAPTURE(seed);
            CHECK(max_bipartite_matching(*task.graph) == oracle::brute_force_matching(*task.graph));
        }
    }
}
