#include "wow/toydpo.hpp"

#include "wow/errors.hpp"
#include "wow/rng.hpp"

#include <algorithm>
#include <cmath>

namespace wow {

namespace {

double log_sum_exp(const std::vector<double>& row) {
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double v : row) s += std::exp(v - mx);
    return mx + std::log(s);
}

/// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit_z(double lc, double lr, double rc, double rr, double beta, bool asymmetric) {
    return asymmetric ? beta * (lc - rc) - (lr - rr) : beta * ((lc - rc) - (lr - rr));
}

void check_pair(const ToyPolicy& p, const ToyPair& pair) {
    if (pair.question >= p.logits.size() || pair.chosen >= p.logits[pair.question].size() ||
        pair.rejected >= p.logits[pair.question].size())
        throw ConfigError("pair refers to an answer outside the policy's candidate set");
}

/// Mean loss in extended precision, with one log-weight overridden. Used
/// only by the finite-difference oracle, where double round-off would
/// swamp small gradient components.
long double mean_loss_extended(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const ToyPair> pairs,
                               const DpoConfig& config, std::size_t oq, std::size_t oj, long double value) {
    auto logp = [&](const ToyPolicy& p, std::size_t q, std::size_t k, bool override_row) {
        const auto& row = p.logits[q];
        auto at = [&](std::size_t j) -> long double {
            return override_row && q == oq && j == oj ? value : static_cast<long double>(row[j]);
        };
        long double mx = at(0);
        for (std::size_t j = 1; j < row.size(); ++j) mx = std::max(mx, at(j));
        long double s = 0.0L;
        for (std::size_t j = 0; j < row.size(); ++j) s += std::exp(at(j) - mx);
        return at(k) - mx - std::log(s);
    };
    long double sum = 0.0L;
    const long double beta = config.beta;
    for (const auto& pr : pairs) {
        const long double dc = logp(policy, pr.question, pr.chosen, true) - logp(reference, pr.question, pr.chosen, false);
        const long double dr =
            logp(policy, pr.question, pr.rejected, true) - logp(reference, pr.question, pr.rejected, false);
        const long double z = config.asymmetric ? beta * dc - dr : beta * (dc - dr);
        sum += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    }
    return sum / static_cast<long double>(pairs.size());
}

}  // namespace

ToyPolicy ToyPolicy::random(std::size_t questions, std::size_t answers, std::uint64_t seed, double scale) {
    Rng rng(seed);
    ToyPolicy p;
    p.logits.assign(questions, std::vector<double>(answers));
    for (auto& row : p.logits)
        for (auto& v : row) v = scale * (2.0 * rng.uniform01() - 1.0);
    return p;
}

double ToyPolicy::logp(std::size_t question, std::size_t answer) const {
    const auto& row = logits.at(question);
    return row.at(answer) - log_sum_exp(row);
}

std::vector<double> ToyPolicy::probs(std::size_t question) const {
    const auto& row = logits.at(question);
    const double lse = log_sum_exp(row);
    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = std::exp(row[i] - lse);
    return out;
}

void DpoConfig::validate() const {
    if (!(beta > 0)) throw ConfigError("beta must be > 0");
    if (!(learning_rate > 0)) throw ConfigError("learning rate must be > 0");
    if (steps < 0) throw ConfigError("steps must be >= 0");
}

double dpo_loss(double logp_c, double logp_r, double ref_logp_c, double ref_logp_r, double beta, bool asymmetric) {
    // -log σ(z) = softplus(-z)
    return softplus(-logit_z(logp_c, logp_r, ref_logp_c, ref_logp_r, beta, asymmetric));
}

double dpo_mean_loss(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const ToyPair> pairs,
                     const DpoConfig& config) {
    if (pairs.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& pr : pairs) {
        check_pair(policy, pr);
        sum += dpo_loss(policy.logp(pr.question, pr.chosen), policy.logp(pr.question, pr.rejected),
                        reference.logp(pr.question, pr.chosen), reference.logp(pr.question, pr.rejected), config.beta,
                        config.asymmetric);
    }
    return sum / static_cast<double>(pairs.size());
}

std::vector<std::vector<double>> dpo_grad(const ToyPolicy& policy, const ToyPolicy& reference,
                                          std::span<const ToyPair> pairs, const DpoConfig& config) {
    std::vector<std::vector<double>> g(policy.logits.size());
    for (std::size_t q = 0; q < g.size(); ++q) g[q].assign(policy.logits[q].size(), 0.0);
    if (pairs.empty()) return g;
    const double inv_n = 1.0 / static_cast<double>(pairs.size());
    for (const auto& pr : pairs) {
        check_pair(policy, pr);
        const double lc = policy.logp(pr.question, pr.chosen);
        const double lr = policy.logp(pr.question, pr.rejected);
        const double z = logit_z(lc, lr, reference.logp(pr.question, pr.chosen),
                                 reference.logp(pr.question, pr.rejected), config.beta, config.asymmetric);
        // dL/dz = -σ(-z); dz/dlc = β; dz/dlr = -β (or -1 in the asymmetric form)
        const double dl_dz = -sigmoid(-z) * inv_n;
        const double wc = dl_dz * config.beta;
        const double wr = dl_dz * (config.asymmetric ? -1.0 : -config.beta);
        // d logp_k / dθ_j = 1[j = k] - p_j
        const auto p = policy.probs(pr.question);
        auto& row = g[pr.question];
        for (std::size_t j = 0; j < row.size(); ++j) row[j] -= (wc + wr) * p[j];
        row[pr.chosen] += wc;
        row[pr.rejected] += wr;
    }
    return g;
}

double grad_check(const ToyPolicy& policy, const ToyPolicy& reference, std::span<const ToyPair> pairs,
                  const DpoConfig& config, double h, double floor) {
    const auto analytic = dpo_grad(policy, reference, pairs, config);
    if (pairs.empty()) return 0.0;
    double worst = 0.0;
    for (std::size_t q = 0; q < policy.logits.size(); ++q)
        for (std::size_t j = 0; j < policy.logits[q].size(); ++j) {
            const long double x = policy.logits[q][j];
            const long double up = mean_loss_extended(policy, reference, pairs, config, q, j, x + h);
            const long double down = mean_loss_extended(policy, reference, pairs, config, q, j, x - h);
            const double numeric = static_cast<double>((up - down) / (2.0L * h));
            const double a = analytic[q][j];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), floor});
            worst = std::max(worst, std::fabs(a - numeric) / denom);
        }
    return worst;
}

TrainResult train_toy(const ToyPolicy& initial, std::span<const ToyPair> pairs, const DpoConfig& config) {
    config.validate();
    const ToyPolicy reference = initial;
    TrainResult result{initial, {}};
    auto record = [&](int step) {
        TraceRow row;
        row.step = step;
        row.loss = dpo_mean_loss(result.policy, reference, pairs, config);
        double m = 0.0;
        for (const auto& pr : pairs)
            m += config.beta * ((result.policy.logp(pr.question, pr.chosen) - reference.logp(pr.question, pr.chosen)) -
                                (result.policy.logp(pr.question, pr.rejected) - reference.logp(pr.question, pr.rejected)));
        row.mean_margin = pairs.empty() ? 0.0 : m / static_cast<double>(pairs.size());
        result.trace.push_back(row);
        if (!std::isfinite(row.loss)) {
            std::string trace;
            for (const auto& r : result.trace) trace += to_json(r).dump() + "\n";
            throw TrainingDiverged("non-finite loss at step " + std::to_string(step) + "; trace:\n" + trace);
        }
    };
    record(0);
    if (pairs.empty()) return result;
    for (int step = 1; step <= config.steps; ++step) {
        const auto g = dpo_grad(result.policy, reference, pairs, config);
        for (std::size_t q = 0; q < g.size(); ++q)
            for (std::size_t j = 0; j < g[q].size(); ++j) result.policy.logits[q][j] -= config.learning_rate * g[q][j];
        record(step);
    }
    return result;
}

Json to_json(const ToyPolicy& p) { return Json{{"logits", p.logits}}; }

ToyPolicy toy_policy_from_json(const Json& j) {
    ToyPolicy p;
    p.logits = j.at("logits").get<std::vector<std::vector<double>>>();
    return p;
}

Json to_json(const TraceRow& r) { return Json{{"step", r.step}, {"loss", r.loss}, {"mean_margin", r.mean_margin}}; }

}  // namespace wow
