#include "wow/errors.hpp"
#include "wow/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

using namespace wow;

namespace {

PreferenceJudgement labeled(int direction, int silver, std::string filtered = {}) {
    PreferenceJudgement j;
    j.direction = direction;
    j.filtered = std::move(filtered);
    j.silver = SilverLabel{silver, proxy_mf(silver >= 0 ? 9 : 7, 10), proxy_mf(silver >= 0 ? 7 : 9, 10)};
    return j;
}

double ece_of(const std::vector<double>& c, const std::vector<int>& ok) {
    // std::vector<bool> has no contiguous storage to span over.
    auto flags = std::make_unique<bool[]>(ok.size());
    for (std::size_t i = 0; i < ok.size(); ++i) flags[i] = ok[i] != 0;
    return ece(c, std::span<const bool>(flags.get(), ok.size())).ece;
}

}  // namespace

TEST_CASE("ECE on hand-computed fixtures") {
    CHECK(ece_of(std::vector<double>(10, 0.9), {1, 1, 1, 1, 1, 1, 1, 1, 0, 0}) == doctest::Approx(0.10));
    CHECK(ece_of({0.75, 0.75, 0.75, 0.75}, {1, 0, 1, 0}) == doctest::Approx(0.25));
    CHECK(ece_of({1.0, 1.0, 1.0}, {1, 1, 1}) == doctest::Approx(0.0));
    CHECK(ece_of({0.5, 0.5}, {1, 0}) == doctest::Approx(0.0));
    // Two bins, each half the mass: 0.5 * 0.15 + 0.5 * 0.05.
    CHECK(ece_of({0.15, 0.15, 0.95, 0.95}, {0, 0, 1, 1}) == doctest::Approx(0.10));
    // Bin 1: mean 0.15, accuracy 0.5. Bin 9: mean 0.95, accuracy 1.
    CHECK(ece_of({0.15, 0.15, 0.95, 0.95}, {1, 0, 1, 1}) == doctest::Approx(0.5 * 0.35 + 0.5 * 0.05));

    CHECK(ece_bin(0.0) == 0);
    CHECK(ece_bin(0.0999) == 0);
    CHECK(ece_bin(0.1) == 1);
    CHECK(ece_bin(0.95) == 9);
    CHECK(ece_bin(1.0) == 9);

    const std::vector<double> c{0.2, 0.8};
    const bool ok[] = {true, false};
    const auto r = ece(c, std::span<const bool>(ok, 2));
    CHECK(r.bins[2].count == 1);
    CHECK(r.bins[8].count == 1);
    CHECK(r.bins[8].accuracy == 0.0);
    CHECK(r.ece == doctest::Approx(0.8));

    CHECK_THROWS_AS(ece(std::vector<double>{}, std::span<const bool>()), EmptyInput);
    CHECK_THROWS_AS(ece(std::vector<double>{1.5}, std::span<const bool>(ok, 1)), MetricError);
    CHECK_THROWS_AS(ece(std::vector<double>{0.5}, std::span<const bool>(ok, 2)), MetricError);
}

TEST_CASE("Acc_WoW counting rules") {
    const std::vector<PreferenceJudgement> js{
        labeled(1, 1),   labeled(-1, -1), labeled(1, -1),
        labeled(0, 1),                       // unfiltered tie: incorrect
        labeled(0, 1, "margin"),             // filtered: excluded
        labeled(0, -1, "inconsistent"),      // filtered: excluded
    };
    auto unlabeled = labeled(1, 1);
    unlabeled.silver.reset();
    auto all = js;
    all.push_back(unlabeled);
    const auto r = acc_wow(std::span<const PreferenceJudgement>(all));
    CHECK(r.overall.numerator == 2);
    CHECK(r.overall.denominator == 4);
    CHECK(r.overall.accuracy == 0.5);
    CHECK(r.filtered == 2);
    CHECK(r.unlabeled == 1);

    const std::vector<PreferenceJudgement> none{labeled(0, 1, "margin")};
    CHECK_THROWS_AS(acc_wow(std::span<const PreferenceJudgement>(none)), EmptyInput);

    // Pair-count weighting across datasets: (3/4 and 1/1) -> 4/5.
    std::map<std::string, std::vector<PreferenceJudgement>> ds{
        {"a", {labeled(1, 1), labeled(1, 1), labeled(1, 1), labeled(-1, 1)}}, {"b", {labeled(1, 1)}}};
    const auto w = acc_wow(ds);
    CHECK(w.overall.accuracy == doctest::Approx(0.8));
    CHECK(w.per_dataset.at("a").accuracy == 0.75);
    CHECK(w.per_dataset.at("b").accuracy == 1.0);
}

TEST_CASE("a judge that flips each silver label with probability 0.3 scores about 0.7") {
    std::mt19937_64 rng(31337);
    std::bernoulli_distribution flip(0.3), coin(0.5);
    std::vector<PreferenceJudgement> js;
    for (int i = 0; i < 10000; ++i) {
        const int s = coin(rng) ? 1 : -1;
        js.push_back(labeled(flip(rng) ? -s : s, s));
    }
    const auto r = acc_wow(std::span<const PreferenceJudgement>(js));
    CHECK(r.overall.denominator == 10000);
    // Three standard deviations of a Binomial(10000, 0.7) share.
    CHECK(std::fabs(r.overall.accuracy - 0.7) < 3 * std::sqrt(0.21 / 10000));
}

TEST_CASE("Acc_WoW of emitted pairs") {
    std::vector<WowPair> ps(4);
    ps[0].silver = PairSilver{1, proxy_mf(9, 10), proxy_mf(7, 10)};
    ps[1].silver = PairSilver{1, proxy_mf(9, 10), proxy_mf(7, 10)};
    ps[2].silver = PairSilver{-1, proxy_mf(7, 10), proxy_mf(9, 10)};
    const auto r = acc_wow_pairs(ps);
    CHECK(r.overall.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(r.unlabeled == 1);
}

TEST_CASE("wrongness: accuracy and mean proxy of wrong answers") {
    const std::vector<AnswerOutcome> a{{true, 1.0}, {true, std::nullopt}, {false, 0.5}, {false, 0.2}, {false, 0.8}};
    const auto r = wrongness(a);
    CHECK(r.n == 5);
    CHECK(r.accuracy == doctest::Approx(0.4));
    REQUIRE(r.p_wrong);
    CHECK(*r.p_wrong == doctest::Approx(0.5));

    const std::vector<AnswerOutcome> perfect{{true, std::nullopt}};
    CHECK_FALSE(wrongness(perfect).p_wrong);
    const std::vector<AnswerOutcome> broken{{false, std::nullopt}};
    CHECK_THROWS_AS(wrongness(broken), MetricError);
    CHECK_THROWS_AS(wrongness(std::vector<AnswerOutcome>{}), EmptyInput);
}

TEST_CASE("confidence from NLL") {
    CHECK(confidence(0.0) == 1.0);
    CHECK(confidence(std::log(2.0)) == doctest::Approx(0.5));
    CHECK(confidence(std::log(4.0)) == doctest::Approx(0.25));
    CHECK_THROWS_AS(confidence(-0.1), MetricError);
}

TEST_CASE("Pearson correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(*pearson(x, std::vector<double>{2, 4, 6, 8, 10}) == doctest::Approx(1.0));
    CHECK(*pearson(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(*pearson(x, std::vector<double>{2, 4, 5, 4, 5}) == doctest::Approx(6.0 / std::sqrt(60.0)));
    CHECK_FALSE(pearson(x, std::vector<double>{3, 3, 3, 3, 3}));
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1}), MetricError);
}

TEST_CASE("metrics do not depend on input order") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> c(300);
    std::vector<int> ok(300);
    std::vector<PreferenceJudgement> js;
    for (int i = 0; i < 300; ++i) {
        c[i] = u(rng);
        ok[i] = u(rng) < c[i];
        js.push_back(labeled(i % 3 - 1, i % 2 ? 1 : -1, i % 7 ? "" : "margin"));
    }
    const double e0 = ece_of(c, ok);
    const double a0 = acc_wow(std::span<const PreferenceJudgement>(js)).overall.accuracy;
    std::vector<std::size_t> idx(300);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int round = 0; round < 5; ++round) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<double> c2;
        std::vector<int> ok2;
        std::vector<PreferenceJudgement> j2;
        for (auto i : idx) {
            c2.push_back(c[i]);
            ok2.push_back(ok[i]);
            j2.push_back(js[i]);
        }
        CHECK(ece_of(c2, ok2) == doctest::Approx(e0).epsilon(1e-12));
        CHECK(acc_wow(std::span<const PreferenceJudgement>(j2)).overall.accuracy == a0);
    }
}

TEST_CASE("accuracy by proxy gap") {
    std::vector<PreferenceJudgement> js;
    auto j = labeled(1, 1);
    j.silver->first = proxy_mf(10, 10);
    j.silver->second = proxy_mf(5, 10);  // gap 0.5
    js.push_back(j);
    j.direction = -1;
    js.push_back(j);
    auto k = labeled(1, 1);
    k.silver->first = proxy_mf(10, 10);
    k.silver->second = proxy_mf(9, 10);  // gap 0.1
    js.push_back(k);
    const auto by = accuracy_by_proxy_gap(js, 0.2);
    REQUIRE(by.size() == 2);
    CHECK(by.at(0.0).accuracy == 1.0);
    CHECK(by.at(0.4).denominator == 2);
    CHECK(by.at(0.4).accuracy == 0.5);
}

TEST_CASE("report serialization") {
    const std::vector<AnswerOutcome> a{{true, 1.0}, {false, 0.5}};
    const auto w = to_json(wrongness(a));
    CHECK(w["acc"] == 0.5);
    CHECK(w["p_wrong"] == 0.5);
    const std::vector<double> c{0.9};
    const bool ok[] = {true};
    const auto e = to_json(ece(c, std::span<const bool>(ok, 1)));
    CHECK(e["bins"].size() == 10);
    CHECK(e["ece"].get<double>() == doctest::Approx(0.1));
    const auto table = format_table({Json{{"domain", "sp"}, {"acc", 0.5}}, Json{{"domain", "mf"}, {"acc", 0.25}}});
    CHECK(table.find("domain") != std::string::npos);
    CHECK(table.find("0.25") != std::string::npos);
}
