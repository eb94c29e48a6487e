#include "wow/corpus.hpp"
#include "wow/elicit.hpp"
#include "wow/graph.hpp"
#include "wow/metrics.hpp"
#include "wow/parsing.hpp"
#include "wow/toydpo.hpp"

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

using namespace wow;

static void BM_ShortestPathTask(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(generate_shortest_path_task({n, 0.5, 10, seed++, 200}));
}
BENCHMARK(BM_ShortestPathTask)->Arg(6)->Arg(8)->Arg(10);

// Larger than the task generators allow; solvers only.
static GraphSpec random_graph(int n, double density, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(density);
    std::uniform_int_distribution<int> w(1, 10);
    GraphSpec g;
    g.n = n;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (v == u + 1 || keep(rng)) g.edges.push_back({u, v, w(rng)});
    g.source = 0;
    g.sink = n - 1;
    return g;
}

static void BM_MaxFlow(benchmark::State& state) {
    const auto g = random_graph(static_cast<int>(state.range(0)), 0.5, 3);
    for (auto _ : state) benchmark::DoNotOptimize(max_flow(g, *g.source, *g.sink));
}
BENCHMARK(BM_MaxFlow)->Arg(8)->Arg(32)->Arg(128);

static void BM_ShortestPath(benchmark::State& state) {
    const auto g = random_graph(static_cast<int>(state.range(0)), 0.3, 4);
    for (auto _ : state) benchmark::DoNotOptimize(shortest_path(g, *g.source, *g.sink));
}
BENCHMARK(BM_ShortestPath)->Arg(32)->Arg(256);

static void BM_Matching(benchmark::State& state) {
    const auto task = generate_matching_task({static_cast<int>(state.range(0)), 4, 0.5, 5, 200});
    for (auto _ : state) benchmark::DoNotOptimize(max_bipartite_matching(*task.graph));
}
BENCHMARK(BM_Matching)->Arg(3)->Arg(4);

static void BM_Ece(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> conf(n);
    auto ok = std::make_unique<bool[]>(n);
    for (std::size_t i = 0; i < n; ++i) {
        conf[i] = u(rng);
        ok[i] = u(rng) < conf[i];
    }
    for (auto _ : state) benchmark::DoNotOptimize(ece(conf, std::span<const bool>(ok.get(), n)));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_Ece)->Arg(1000)->Arg(100000);

static void BM_MarginThreshold(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> d(0, 5);
    std::vector<double> margins(n);
    for (auto& m : margins) m = d(rng);
    for (auto _ : state) benchmark::DoNotOptimize(compute_margin_threshold(margins, 10));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_MarginThreshold)->Arg(2000)->Arg(200000);

static void BM_ExtractPath(benchmark::State& state) {
    const AnswerContext ctx{Domain::sp, 0, 10, 0};
    const std::string text =
        "Let me compute. From node 0 we can reach 3 at cost 1, then 4 at cost 3. Other routes are longer.\n"
        "The final answer is: shortest path: 0 -> 3 -> 4; total weight: 4.";
    for (auto _ : state) benchmark::DoNotOptimize(extract_answer(ctx, text));
}
BENCHMARK(BM_ExtractPath);

static void BM_ExtractChoice(benchmark::State& state) {
    const AnswerContext ctx{Domain::com2, 4, 0, 0};
    const std::string text = "Considering each option in turn, B seems unlikely.\nAnswer: C";
    for (auto _ : state) benchmark::DoNotOptimize(extract_answer(ctx, text));
}
BENCHMARK(BM_ExtractChoice);

static void BM_DpoGrad(benchmark::State& state) {
    const auto policy = ToyPolicy::random(50, 10, 1);
    std::vector<ToyPair> pairs;
    for (std::size_t q = 0; q < 50; ++q)
        for (std::size_t a = 0; a + 1 < 10; ++a) pairs.push_back({q, a, a + 1});
    const DpoConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(dpo_grad(policy, policy, pairs, cfg));
}
BENCHMARK(BM_DpoGrad);

BENCHMARK_MAIN();
