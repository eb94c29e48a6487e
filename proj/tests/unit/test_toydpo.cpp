#include "wow/errors.hpp"
#include "wow/rng.hpp"
#include "wow/toydpo.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wow;

namespace {

std::vector<ToyPair> random_pairs(std::size_t questions, std::size_t answers, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ToyPair> out;
    while (out.size() < n) {
        const ToyPair p{rng() % questions, rng() % answers, rng() % answers};
        if (p.chosen != p.rejected) out.push_back(p);
    }
    return out;
}

}  // namespace

TEST_CASE("DPO loss values") {
    CHECK(std::fabs(dpo_loss(-1, -1, -1, -1, 0.1) - std::log(2.0)) < 1e-12);
    // One nat of extra chosen log-ratio at beta 0.1.
    CHECK(dpo_loss(0, -1, -1, -1, 0.1) == doctest::Approx(std::log1p(std::exp(-0.1))).epsilon(1e-12));
    CHECK(dpo_loss(0, -1, -1, -1, 0.1) == doctest::Approx(0.6444).epsilon(1e-4));
    CHECK(dpo_loss(-1, 0, -1, -1, 0.1) == doctest::Approx(0.7444).epsilon(1e-4));
    // Asymmetric form scales the chosen log-ratio only.
    CHECK(dpo_loss(-1, 0, -1, -1, 0.1, true) == doctest::Approx(std::log1p(std::exp(1.0))).epsilon(1e-12));
    CHECK(dpo_loss(0, -1, -1, -1, 0.1, true) == doctest::Approx(0.6444).epsilon(1e-4));
    // Stable at extreme margins.
    CHECK(std::isfinite(dpo_loss(0, -5000, 0, 0, 1.0)));
    CHECK(dpo_loss(-5000, 0, 0, 0, 1.0) == doctest::Approx(5000.0));
}

TEST_CASE("toy policy basics") {
    const auto p = ToyPolicy::random(3, 4, 5);
    for (std::size_t q = 0; q < 3; ++q) {
        const auto pr = p.probs(q);
        double sum = 0;
        for (double x : pr) sum += x;
        CHECK(sum == doctest::Approx(1.0));
        for (std::size_t a = 0; a < 4; ++a) CHECK(std::exp(p.logp(q, a)) == doctest::Approx(pr[a]));
    }
    const auto again = ToyPolicy::random(3, 4, 5);
    CHECK(again.logits == p.logits);
    const auto back = toy_policy_from_json(to_json(p));
    CHECK(back.logits == p.logits);
}

TEST_CASE("gradient pushes chosen up and rejected down") {
    const auto policy = ToyPolicy::random(2, 4, 3);
    const std::vector<ToyPair> pairs{{0, 1, 2}};
    DpoConfig cfg;
    const auto g = dpo_grad(policy, policy, pairs, cfg);
    CHECK(g[0][1] < 0);
    CHECK(g[0][2] > 0);
    CHECK(g[0][0] == doctest::Approx(0.0));
    CHECK(g[0][3] == doctest::Approx(0.0));
    for (double x : g[1]) CHECK(x == 0.0);
    // At initialization σ(0) = ½: |∂| = β/2.
    CHECK(g[0][1] == doctest::Approx(-0.05));

    const auto zero = dpo_grad(policy, policy, std::span<const ToyPair>(), cfg);
    for (const auto& row : zero)
        for (double x : row) CHECK(x == 0.0);
    CHECK(dpo_mean_loss(policy, policy, std::span<const ToyPair>(), cfg) == 0.0);
}

TEST_CASE("analytic gradient matches finite differences") {
    for (bool asym : {false, true}) {
        DpoConfig cfg;
        cfg.asymmetric = asym;
        double worst = 0;
        for (std::uint64_t s = 0; s < 100; ++s) {
            const auto policy = ToyPolicy::random(3, 5, 1000 + s, 2.0);
            const auto reference = ToyPolicy::random(3, 5, 5000 + s, 2.0);
            cfg.beta = 0.05 + 0.01 * static_cast<double>(s % 20);
            const auto pairs = random_pairs(3, 5, 1 + s % 12, s);
            worst = std::max(worst, grad_check(policy, reference, pairs, cfg));
        }
        CAPTURE(asym);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("training on a planted preference") {
    // Hidden quality: answer a of every question is better than a + 1.
    const std::size_t Q = 20, A = 5;
    std::vector<ToyPair> pairs;
    for (std::size_t q = 0; q < Q; ++q)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t b = a + 1; b < A; ++b) pairs.push_back({q, a, b});
    const auto initial = ToyPolicy::random(Q, A, 77);
    DpoConfig cfg;
    cfg.beta = 0.1;
    cfg.learning_rate = 1.0;
    cfg.steps = 300;
    const auto result = train_toy(initial, pairs, cfg);
    REQUIRE(result.trace.size() == static_cast<std::size_t>(cfg.steps + 1));
    CHECK(std::fabs(result.trace.front().loss - std::log(2.0)) < 1e-12);
    for (std::size_t i = 1; i < result.trace.size(); ++i) CHECK(result.trace[i].loss <= result.trace[i - 1].loss + 1e-3);
    CHECK(result.trace.back().loss < result.trace.front().loss);

    std::size_t improved = 0;
    for (const auto& p : pairs) {
        const double before = initial.logp(p.question, p.chosen) - initial.logp(p.question, p.rejected);
        const double after = result.policy.logp(p.question, p.chosen) - result.policy.logp(p.question, p.rejected);
        improved += after > before;
    }
    CHECK(static_cast<double>(improved) >= 0.95 * static_cast<double>(pairs.size()));

    const auto idle = train_toy(initial, std::span<const ToyPair>(), cfg);
    CHECK(idle.policy.logits == initial.logits);
}

TEST_CASE("divergence and configuration errors") {
    DpoConfig bad;
    bad.beta = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = DpoConfig{};
    bad.steps = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    DpoConfig wild;
    wild.beta = 1.0;
    wild.learning_rate = std::numeric_limits<double>::infinity();
    wild.steps = 3;
    const auto policy = ToyPolicy::random(1, 3, 1);
    const std::vector<ToyPair> pairs{{0, 0, 1}};
    CHECK_THROWS_AS(train_toy(policy, pairs, wild), TrainingDiverged);
}
