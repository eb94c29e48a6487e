#pragma once

#include "wow/jsonl.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace wow {

/// Tabular softmax policy: one row of unnormalized log-weights per question;
/// the answer log-probability is the log-softmax entry.
struct ToyPolicy {
    std::vector<std::vector<double>> logits;

    static ToyPolicy random(std::size_t questions, std::size_t answers, std::uint64_t seed, double scale = 1.0);

    double logp(std::size_t question, std::size_t answer) const;
    std::vector<double> probs(std::size_t question) const;
};

struct ToyPair {
    std::size_t question = 0;
    std::size_t chosen = 0;
    std::size_t rejected = 0;
};

struct DpoConfig {
    double beta = 0.1;
    double learning_rate = 1.0;
    int steps = 200;
    /// β on the chosen log-ratio only: z = β(lc - rc) - (lr - rr).
    bool asymmetric = false;

    void validate() const;
};

/// -log σ(z) with z = β[(lc - rc) - (lr - rr)], computed stably.
double dpo_loss(double logp_c, double logp_r, double ref_logp_c, double ref_logp_r, double beta,
                bool asymmetric = false);

/// Mean loss over `pairs`; 0 for an empty list.
double dpo_mean_loss(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const ToyPair> pairs,
                     const DpoConfig& config);

/// Analytic gradient of the mean loss with respect to every log-weight.
std::vector<std::vector<double>> dpo_grad(const ToyPolicy& policy, const ToyPolicy& reference,
                                          std::span<const ToyPair> pairs, const DpoConfig& config);

/// Largest componentwise relative error between the analytic gradient and
/// central finite differences with step `h`, evaluated in extended
/// precision. The denominator is max(|analytic|, |numeric|, floor), so
/// components that vanish analytically are compared absolutely.
double grad_check(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const ToyPair> pairs,
                  const DpoConfig& config, double h = 1e-5, double floor = 1e-6);

struct TraceRow {
    int step = 0;
    double loss = 0.0;
    /// Mean of β·(Δc - Δr) over pairs, Δ = logp - ref logp.
    double mean_margin = 0.0;
};

struct TrainResult {
    ToyPolicy policy;
    std::vector<TraceRow> trace;
};

/// Plain gradient descent against a frozen copy of `initial`. Throws
/// TrainingDiverged (the trace so far is in the message) on a non-finite loss.
TrainResult train_toy(const ToyPolicy& initial, std::span<const ToyPair> pairs, const DpoConfig& config);

Json to_json(const ToyPolicy& p);
ToyPolicy toy_policy_from_json(const Json& j);
Json to_json(const TraceRow& r);

}  // namespace wow
