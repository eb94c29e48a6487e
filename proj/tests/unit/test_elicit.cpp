#include "experiments.hpp"
#include "oracles.hpp"

#include "wow/corpus.hpp"
#include "wow/elicit.hpp"
#include "wow/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wow;

namespace {

GenerationRecord path_record(int index, std::vector<int> nodes, double claimed) {
    GenerationRecord r;
    r.task_id = "ex";
    r.sample_index = index;
    r.generator = "gen";
    r.extracted = PathAnswer{std::move(nodes), claimed};
    return r;
}

RetryPolicy instant_retry() {
    RetryPolicy p;
    p.sleep = [](std::chrono::milliseconds) {};
    return p;
}

}  // namespace

TEST_CASE("length heuristic prefers the longer answer") {
    const auto j = pref_heuristic(std::string(120, 'a'), std::string(80, 'b'));
    CHECK(j.direction == 1);
    CHECK(*j.margin == 40.0);
    CHECK(j.raw["len_1"] == 120);
    CHECK(j.raw["len_2"] == 80);
    CHECK(pref_heuristic("short", "much longer").direction == -1);
    CHECK(pref_heuristic("same", "same").direction == 0);
    // Code points, not bytes.
    CHECK(text_length("\xc3\xa9\xc3\xa9\xc3\xa9") == 3);
    CHECK(pref_heuristic("\xc3\xa9\xc3\xa9\xc3\xa9", "abcd").direction == -1);
}

TEST_CASE("consistency scores count parseable samples only") {
    std::vector<GenerationRecord> recs;
    int i = 0;
    for (int k = 0; k < 4; ++k) recs.push_back(path_record(i++, {0, 3, 4}, 4));
    for (int k = 0; k < 3; ++k) recs.push_back(path_record(i++, {0, 2, 4}, 5));
    for (int k = 0; k < 2; ++k) recs.push_back(path_record(i++, {0, 1, 4}, 7));
    recs.push_back(path_record(i++, {0, 5, 4}, 6));
    GenerationRecord junk;
    junk.sample_index = i++;
    recs.push_back(junk);

    const auto s = consistency_scores(recs);
    CHECK(s.parseable == 10);
    CHECK(s.excluded == 1);
    const auto key = [&](std::size_t idx) { return normalize_key(*recs[idx].extracted); };
    CHECK(s.sr.at(key(0)) == doctest::Approx(0.4));
    CHECK(s.sr.at(key(4)) == doctest::Approx(0.3));
    CHECK(s.sr.at(key(7)) == doctest::Approx(0.2));
    CHECK(s.sr.at(key(9)) == doctest::Approx(0.1));

    const auto j = pref_consistency(Domain::sp, recs[4], recs[7], s);
    CHECK(j.direction == 1);
    CHECK(*j.margin == doctest::Approx(0.1));
    CHECK(pref_consistency(Domain::sp, recs[9], recs[0], s).direction == -1);
    CHECK(pref_consistency(Domain::sp, recs[1], recs[2], s).direction == 0);

    CHECK_THROWS_AS(pref_consistency(Domain::bg, recs[0], recs[1], s), NotApplicable);
    CHECK_THROWS_AS(pref_consistency(Domain::sp, recs[0], junk, s), ConsistencyUnavailable);
    CHECK_THROWS_AS(consistency_scores(std::vector<GenerationRecord>{junk}), ConsistencyUnavailable);
}

TEST_CASE("logit preference favours the lower negative log-likelihood") {
    const double half = std::log(0.5);
    CHECK(nll(std::vector<double>{half, half}) == doctest::Approx(1.3862943611));
    auto a = path_record(0, {0, 3, 4}, 4), b = path_record(1, {0, 2, 4}, 5);
    a.token_logprobs = std::vector<double>{-0.1, -0.2};
    b.token_logprobs = std::vector<double>{half, half};
    const auto j = pref_logits(a, b);
    CHECK(j.direction == 1);
    CHECK(*j.margin == doctest::Approx(1.3862943611 - 0.3));
    CHECK(pref_logits(b, a).direction == -1);
    b.token_logprobs.reset();
    CHECK_THROWS_AS(pref_logits(a, b), LogitsUnavailable);
}

TEST_CASE("pairwise combination over every verdict pair") {
    struct Case {
        Verdict v12, v21;
        int direction;
        double f;
    };
    const Verdict o1 = Verdict::output1, o2 = Verdict::output2, inv = Verdict::invalid;
    const Case cases[] = {
        {o1, o2, 1, 1.0},    {o2, o1, -1, -1.0},  {o1, o1, 0, 0.0},
        {o2, o2, 0, 0.0},    {o1, inv, 0, 0.5},   {inv, o2, 0, 0.5},
        {o2, inv, 0, -0.5},  {inv, o1, 0, -0.5},  {inv, inv, 0, 0.0},
    };
    for (const auto& c : cases) {
        CAPTURE(to_string(c.v12));
        CAPTURE(to_string(c.v21));
        const auto j = combine_pairwise(c.v12, c.v21);
        CHECK(j.direction == c.direction);
        CHECK(j.raw["f"].get<double>() == c.f);
        CHECK(j.consistency_filtered() == (c.direction == 0));
    }
}

TEST_CASE("pairwise preference asks both orders") {
    const std::string q = "Q?", a = "answer A", b = "answer B";
    const auto p12 = render_pairwise_prompt(q, a, b);
    const auto p21 = render_pairwise_prompt(q, b, a);
    CHECK(p12 != p21);
    CHECK(p12.find("answer A") < p12.find("answer B"));
    MockTransport mock(std::vector<Json>{
        Json{{"prompt_hash", prompt_hash(p12)}, {"completions", {"Preferred output: 2"}}},
        Json{{"prompt_hash", prompt_hash(p21)}, {"completions", {"garbled", "Preferred output: 1"}}}});
    Gateway gw(mock, 2, instant_retry());
    JudgeConfig jc;
    jc.evaluator_name = "judge-x";
    const auto j = pref_pairwise(q, a, b, jc, gw);
    // Output 2 wins in the first order, output 1 (= b) after the one retry.
    CHECK(j.direction == -1);
    CHECK(j.evaluator == "judge-x");
    CHECK(j.raw["attempts"] == Json::array({1, 2}));
}

TEST_CASE("score batches: parse, retry once, discard") {
    const std::string q = "Shortest path?";
    const std::vector<std::string> five = {"a1", "a2", "a3", "a4", "a5"};
    const auto prompt5 = render_score_prompt(q, five);
    CHECK(prompt5.find("five") != std::string::npos);
    CHECK(prompt5.find("Response 5:\na5") != std::string::npos);
    const std::vector<std::string> three = {"a1", "a2", "a3"};
    const auto prompt3 = render_score_prompt(q, three);
    CHECK(prompt3.find("three") != std::string::npos);

    JudgeConfig jc;
    {
        MockTransport mock(std::vector<Json>{
            Json{{"prompt_hash", prompt_hash(prompt5)},
                 {"completions", {"Score: 4\nScore: 2\nScore: 5\nScore: 1\nScore: 3"}}}});
        Gateway gw(mock, 1, instant_retry());
        CHECK(score_batch(q, five, jc, gw) == std::vector<int>{4, 2, 5, 1, 3});
    }
    {
        MockTransport mock(std::vector<Json>{
            Json{{"prompt_hash", prompt_hash(prompt3)}, {"completions", {"Score: 4\nScore: 2", "Score: 4\nScore: 2\nScore: 0"}}}});
        Gateway gw(mock, 1, instant_retry());
        CHECK(score_batch(q, three, jc, gw) == std::vector<int>{4, 2, 0});
        CHECK(mock.calls() == 2);
    }
    {
        MockTransport mock(std::vector<Json>{Json{{"prompt_hash", prompt_hash(prompt3)}, {"completions", {"no scores"}}}});
        Gateway gw(mock, 1, instant_retry());
        CHECK_THROWS_AS(score_batch(q, three, jc, gw), BatchDiscarded);
    }
    {
        MockTransport mock(std::vector<Json>{});
        Gateway gw(mock, 1, instant_retry());
        CHECK_THROWS_AS(score_batch(q, {}, jc, gw), ConfigError);
        CHECK_THROWS_AS(score_batch(q, std::vector<std::string>(6, "a"), jc, gw), ConfigError);
        CHECK(mock.calls() == 0);
    }

    const auto s = pref_score(4, 2, MarginFilter{});
    CHECK(s.direction == 1);
    CHECK(*s.margin == 2.0);
    const auto filtered = pref_score(4, 3, MarginFilter{50, 1.0});
    CHECK(filtered.direction == 0);
    CHECK(filtered.filtered == "margin");
    CHECK(pref_score(2, 2, MarginFilter{}).direction == 0);
}

TEST_CASE("margin threshold is the nearest-rank percentile") {
    const std::vector<double> ms{0, 0, 1, 1, 2, 2, 3, 3, 4, 4};
    CHECK(compute_margin_threshold(ms, 50) == 2.0);
    CHECK(compute_margin_threshold(ms, 10) == 4.0);
    CHECK(compute_margin_threshold(ms, 90) == 0.0);
    CHECK_FALSE(compute_margin_threshold(ms, 100));
    // Strictly greater: with m = 50, margins 3 and 4 survive.
    const MarginFilter f{50, compute_margin_threshold(ms, 50)};
    int kept = 0;
    for (double m : ms) kept += f.passes(m);
    CHECK(kept == 4);

    const std::vector<double> flat(8, 2.0);
    const MarginFilter ff{50, compute_margin_threshold(flat, 50)};
    CHECK(*ff.threshold == 2.0);
    CHECK_FALSE(ff.passes(2.0));

    CHECK(compute_margin_threshold(std::vector<double>{3}, 10) == 3.0);
    CHECK_THROWS_AS(compute_margin_threshold(std::vector<double>{}, 50), EmptyInput);
    CHECK_THROWS_AS(compute_margin_threshold(ms, 0), ConfigError);
    CHECK_THROWS_AS(compute_margin_threshold(ms, 101), ConfigError);
}

TEST_CASE("every method is antisymmetric under swapping the pair") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(0, 50), score(0, 5);
    std::uniform_real_distribution<double> lp(-3, 0);
    for (int i = 0; i < 500; ++i) {
        const std::string a(len(rng), 'x'), b(len(rng), 'y');
        CHECK(pref_heuristic(a, b).direction == -pref_heuristic(b, a).direction);
        const int s1 = score(rng), s2 = score(rng);
        CHECK(pref_score(s1, s2, {}).direction == -pref_score(s2, s1, {}).direction);
        auto r1 = path_record(0, {0, 4}, 1), r2 = path_record(1, {0, 4}, 1);
        r1.token_logprobs = std::vector<double>{lp(rng), lp(rng)};
        r2.token_logprobs = std::vector<double>{lp(rng)};
        CHECK(pref_logits(r1, r2).direction == -pref_logits(r2, r1).direction);
    }
    const Verdict vs[] = {Verdict::output1, Verdict::output2, Verdict::invalid};
    for (auto x : vs)
        for (auto y : vs) CHECK(combine_pairwise(x, y).direction == -combine_pairwise(y, x).direction);
}

TEST_CASE("run-level elicitor applies one threshold across the run") {
    TaskInstance task = make_shortest_path_task("ex", oracle::example_graph());
    std::vector<GenerationRecord> recs;
    const std::vector<int> lengths{10, 20, 40, 80};
    for (int i = 0; i < 4; ++i) {
        auto r = path_record(i, {0, 2, 4}, 5);
        r.raw_text = std::string(lengths[i], 'z');
        recs.push_back(r);
    }
    TaskAnswers ta;
    ta.task = &task;
    for (auto& r : recs) {
        ta.samples.push_back(&r);
        ta.wrong.push_back(&r);
        ta.wrong_proxy.push_back(std::nullopt);
    }
    const std::vector<TaskAnswers> run{ta};
    std::vector<PairToJudge> pairs;
    for (int i = 0; i < 4; ++i)
        for (int k = i + 1; k < 4; ++k) pairs.push_back({&run[0], i, k});

    ElicitConfig cfg;
    cfg.method = Method::heuristic;
    cfg.margin = 50;
    auto el = make_elicitor(cfg, nullptr);
    CHECK(el->evaluator() == "length");
    Diagnostics diag;
    el->prepare(run, diag);
    const auto js = el->judge(pairs, diag);
    // Margins 10, 30, 70, 20, 60, 40: threshold 30 keeps 70, 60 and 40.
    REQUIRE(js.size() == 6);
    int decided = 0;
    for (const auto& j : js) {
        CHECK(j.raw["threshold"] == 30.0);
        if (j.direction != 0) {
            ++decided;
            CHECK(*j.margin > 30.0);
            CHECK(j.direction == -1);
        } else {
            CHECK(j.filtered == "margin");
        }
    }
    CHECK(decided == 3);
    CHECK(diag.counter("elicit.filtered.margin") == 3);
}

TEST_CASE("judgements round-trip through JSONL") {
    auto j = combine_pairwise(Verdict::output1, Verdict::output2);
    j.task_id = "t";
    j.first = {"g", 1};
    j.second = {"g", 3};
    j.evaluator = "e";
    j.silver = SilverLabel{1, proxy_mf(9, 10), proxy_mf(7, 10)};
    const auto dir = oracle::scratch_dir("judgements");
    write_judgements(dir / "j.jsonl", {j, pref_heuristic("a", "bb")});
    const auto back = read_judgements(dir / "j.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(to_json(back[0]) == to_json(j));
    CHECK(back[0].silver->direction == 1);
    CHECK(back[1].direction == -1);
}

TEST_CASE("stricter margins give more accurate score preferences on the simulated judge") {
    const auto trend = experiment::margin_trend(oracle::scratch_dir("margin-trend"), 60, {10, 50, 100});
    REQUIRE(trend.size() == 3);
    for (const auto& p : trend) {
        CAPTURE(p.m);
        CAPTURE(p.report.overall.denominator);
        CHECK(p.report.overall.denominator > 0);
    }
    CHECK(trend[0].report.overall.accuracy > trend[1].report.overall.accuracy);
    CHECK(trend[1].report.overall.accuracy > trend[2].report.overall.accuracy);
    CHECK(trend[0].report.overall.denominator < trend[1].report.overall.denominator);
    CHECK(trend[1].report.overall.denominator < trend[2].report.overall.denominator);
}
