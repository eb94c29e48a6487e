#include "golden.hpp"
#include "oracles.hpp"

#include "wow/corpus.hpp"
#include "wow/errors.hpp"

#include <doctest.h>

#include <set>

using namespace wow;

TEST_CASE("generation is a pure function of its arguments") {
    const auto a = generate_shortest_path_task({5, 0.5, 10, 7, 200});
    const auto b = generate_shortest_path_task({5, 0.5, 10, 7, 200});
    CHECK(a == b);
    const auto text = to_json(a).dump() + "\n";
    CHECK(text == to_json(b).dump() + "\n");
    CHECK(golden::expect("sp_n5_s7.json", text) == text);
    CHECK(to_json(generate_maxflow_task({6, 0.5, 10, 3, 200})) == to_json(generate_maxflow_task({6, 0.5, 10, 3, 200})));
    CHECK(to_json(generate_shortest_path_task({5, 0.5, 10, 8, 200})) != to_json(a));
}

TEST_CASE("prompt follows the edge-list template") {
    auto g = oracle::example_graph();
    const auto task = make_shortest_path_task("example", g);
    CHECK(task.prompt.find("the nodes are numbered from 0 to 5") != std::string::npos);
    CHECK(task.prompt.find("an edge between node 0 and node 3 with weight 1,") != std::string::npos);
    CHECK(task.prompt.find("an edge between node 4 and node 5 with weight 2.") != std::string::npos);
    CHECK(task.prompt.find("shortest path from node 0 to node 4") != std::string::npos);
    const auto& pv = std::get<PathValue>(task.ground_truth);
    CHECK(pv.w_gt == 4);
    CHECK(pv.w_worst == 15);
    CHECK(pv.witness == std::vector<int>{0, 3, 4});
}

TEST_CASE("fuzz: 1,000 generated graphs respect the graph invariants") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const int n = 4 + static_cast<int>(seed % 7);
        TaskInstance t;
        switch (seed % 3) {
            case 0: t = generate_shortest_path_task({n, 0.45, 10, seed, 200}); break;
            case 1: t = generate_maxflow_task({n, 0.45, 10, seed, 200}); break;
            default: t = generate_matching_task({1 + n % 8, 1 + (n + 3) % 8, 0.4, seed, 200}); break;
        }
        CAPTURE(seed);
        REQUIRE(t.graph);
        const auto& g = *t.graph;
        CHECK_NOTHROW(g.validate());
        CHECK_NOTHROW(t.validate());
        std::set<std::pair<int, int>> seen;
        for (const auto& e : g.edges) {
            CHECK(e.u < e.v);
            CHECK(e.w >= 1);
            CHECK(seen.emplace(e.u, e.v).second);
        }
        if (t.domain == Domain::sp) {
            CHECK(is_connected(g));
            const auto& pv = std::get<PathValue>(t.ground_truth);
            CHECK(pv.w_gt < pv.w_worst);
            CHECK(path_weight(g, pv.witness) == pv.w_gt);
        } else if (t.domain == Domain::mf) {
            CHECK(*g.source != *g.sink);
            CHECK(std::get<ScalarValue>(t.ground_truth).value > 0);
        } else {
            CHECK_FALSE(g.edges.empty());
        }
    }
}

TEST_CASE("generator argument checks") {
    CHECK_THROWS_AS(generate_shortest_path_task({11, 0.5, 10, 1, 200}), ConfigError);
    CHECK_THROWS_AS(generate_shortest_path_task({3, 0.5, 10, 1, 200}), ConfigError);
    CHECK_THROWS_AS(generate_matching_task({9, 2, 0.5, 1, 200}), ConfigError);
    // A density this low never connects six nodes within two attempts.
    CHECK_THROWS_AS(generate_shortest_path_task({6, 0.01, 10, 1, 2}), GenerationFailed);
}

namespace {

std::vector<TaskInstance> plain_tasks(std::size_t n) {
    std::vector<TaskInstance> out;
    for (std::size_t i = 0; i < n; ++i) {
        TaskInstance t;
        t.id = "t" + std::to_string(i);
        t.domain = Domain::generic;
        t.prompt = "q";
        t.ground_truth = ScalarValue{1};
        out.push_back(t);
    }
    return out;
}

SplitCounts count(const std::vector<TaskInstance>& ts) {
    SplitCounts c;
    for (const auto& t : ts) {
        if (t.split == Split::train) ++c.train;
        if (t.split == Split::val) ++c.val;
        if (t.split == Split::test) ++c.test;
    }
    return c;
}

}  // namespace

TEST_CASE("split rounding: floor val, floor test, remainder to train") {
    const SplitPlan plan;
    auto c = count(assign_splits(plain_tasks(10), plan));
    CHECK(c.train == 8);
    CHECK(c.val == 1);
    CHECK(c.test == 1);
    c = count(assign_splits(plain_tasks(625), plan));
    CHECK(c.val == 62);
    CHECK(c.test == 62);
    CHECK(c.train == 501);

    const auto a = assign_splits(plain_tasks(50), plan);
    const auto b = assign_splits(plain_tasks(50), plan);
    CHECK(a == b);
    SplitPlan other;
    other.seed = 43;
    CHECK(assign_splits(plain_tasks(50), other) != a);

    auto assigned = a;
    CHECK_THROWS_AS(assign_splits(assigned, plan), ConfigError);
    SplitPlan bad;
    bad.train = 0.7;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

namespace {

TaskInstance kc_task() {
    TaskInstance t;
    t.id = "kc-1";
    t.domain = Domain::kc;
    t.prompt = "The ___ of France is ___, on the river ___.";
    t.options = {"capital; Lyon; Rhone", "capital; Paris; Seine", "city; Paris; Loire", "capital; Paris; Loire"};
    t.option_blanks = {{"capital", "Lyon", "Rhone"}, {"capital", "Paris", "Seine"}, {"city", "Paris", "Loire"},
                       {"capital", "Paris", "Loire"}};
    t.ground_truth = BlanksFill{{"capital", "Paris", "Seine"}, 1};
    return t;
}

}  // namespace

TEST_CASE("shuffle_options") {
    const auto t = kc_task();
    const auto same = shuffle_options(t, kIdentityShuffleSeed);
    CHECK(same.task == t);
    CHECK(same.order == std::vector<int>{0, 1, 2, 3});

    for (std::uint64_t seed = 1; seed < 50; ++seed) {
        const auto s = shuffle_options(t, seed);
        std::multiset<std::string> before(t.options.begin(), t.options.end());
        std::multiset<std::string> after(s.task.options.begin(), s.task.options.end());
        CHECK(before == after);
        const int correct = std::get<BlanksFill>(s.task.ground_truth).correct_option;
        CHECK(s.task.options[correct] == t.options[1]);
        CHECK(s.task.option_blanks[correct] == t.option_blanks[1]);
    }
    const auto rec = shuffle_options(t, 12345);
    const std::string order = Json(rec.order).dump();
    CHECK(golden::expect("shuffle_4_options_seed12345.json", order + "\n") == order + "\n");

    CHECK_THROWS_AS(shuffle_options(generate_shortest_path_task({5, 0.5, 10, 1, 200}), 1), NotApplicable);
}

TEST_CASE("ingest_tasks") {
    const auto dir = oracle::scratch_dir("ingest");
    SUBCASE("empty file") {
        write_text_file(dir / "empty.jsonl", "");
        CHECK(ingest_tasks(dir / "empty.jsonl", Domain::kc).empty());
    }
    SUBCASE("one kc record") {
        auto j = to_json(kc_task());
        j.erase("split");
        j.erase("domain");
        write_text_file(dir / "kc.jsonl", j.dump() + "\n");
        const auto tasks = ingest_tasks(dir / "kc.jsonl", Domain::kc);
        REQUIRE(tasks.size() == 1);
        CHECK(tasks[0].options.size() == 4);
        CHECK(tasks[0].domain == Domain::kc);
        CHECK(tasks[0].split == Split::unassigned);
    }
    SUBCASE("missing ground truth reports the line") {
        auto good = to_json(kc_task());
        auto bad = good;
        bad.erase("ground_truth");
        bad["id"] = "kc-2";
        write_text_file(dir / "bad.jsonl", good.dump() + "\n" + bad.dump() + "\n");
        try {
            ingest_tasks(dir / "bad.jsonl", Domain::kc);
            FAIL("expected IngestError");
        } catch (const IngestError& e) {
            CHECK(e.line() == 2);
            CHECK(e.reason().find("ground_truth") != std::string::npos);
        }
        const auto issues = validate_task_file(dir / "bad.jsonl");
        REQUIRE(issues.size() == 1);
        CHECK(issues[0].line == 2);
    }
    SUBCASE("malformed JSON and invariant violations") {
        auto no_options = to_json(kc_task());
        no_options.erase("options");
        write_text_file(dir / "mixed.jsonl", "{not json\n" + no_options.dump() + "\n");
        const auto issues = validate_task_file(dir / "mixed.jsonl");
        REQUIRE(issues.size() == 2);
        CHECK(issues[0].line == 1);
        CHECK(issues[1].line == 2);
    }
    SUBCASE("round trip through the task file format") {
        std::vector<TaskInstance> tasks{kc_task(), generate_shortest_path_task({6, 0.5, 10, 2, 200}),
                                        generate_maxflow_task({5, 0.5, 10, 2, 200}),
                                        generate_matching_task({3, 4, 0.5, 2, 200})};
        write_tasks(dir / "all.jsonl", tasks);
        CHECK(read_tasks(dir / "all.jsonl") == tasks);
    }
}
