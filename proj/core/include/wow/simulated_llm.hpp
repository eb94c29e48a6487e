#pragma once

#include "wow/gateway.hpp"

#include <cstdint>
#include <string>

namespace wow {

/// Knobs for the simulated model used by the mock transport's fallback.
struct SimulationProfile {
    std::uint64_t seed = 7;
    /// Probability that a generated graph answer is optimal.
    double p_optimal = 0.35;
    /// Probability that a stated path weight carries an arithmetic slip.
    double p_arithmetic_slip = 0.2;
    /// Probability that a pairwise judge prefers the truly less-wrong answer.
    double judge_accuracy = 0.8;
    /// Probability that a pairwise judge answers "1" regardless.
    double position_bias = 0.15;
    /// Score noise amplitude: uniform integer in [-noise, noise].
    int score_noise = 1;
};

SimulationProfile simulation_profile_from_json(const Json& j);

/// Deterministic stand-in for an LLM. It reads the prompt templates this
/// library renders (graph questions, multiple-choice questions, pairwise and
/// score judging prompts) and answers from the recovered structure with
/// seeded noise. The output depends only on (profile, prompt, slot).
class SimulatedLlm {
public:
    explicit SimulatedLlm(SimulationProfile profile) : profile_(profile) {}

    ChatResponse complete(const ChatRequest& request) const;

    /// Higher is less wrong; nullopt when the answer cannot be assessed.
    std::optional<double> assess(const std::string& question, const std::string& answer) const;

private:
    std::string generate(const std::string& prompt, std::uint64_t seed) const;
    std::string judge_pairwise(const std::string& prompt, std::uint64_t seed) const;
    std::string judge_scores(const std::string& prompt, std::uint64_t seed) const;

    SimulationProfile profile_;
};

}  // namespace wow
