#pragma once

#include "wow/corpus.hpp"
#include "wow/gateway.hpp"
#include "wow/parsing.hpp"

#include <atomic>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

namespace wow {

enum class ProxyKind { kc, sp, mf, nl, bg, cs };

std::string_view to_string(ProxyKind k);
ProxyKind parse_proxy_kind(std::string_view name);

/// Silver correctness score p(a|q). Bounded kinds lie in [0, 1]; `nl` is
/// unbounded in (-inf, 0].
struct ProxyScore {
    double value = 0.0;
    ProxyKind kind = ProxyKind::kc;
    bool bounded = true;
    /// sp only: the stated path was incoherent and scored 0.
    bool invalid_path = false;
    /// The raw formula left [0, 1] and was clamped.
    bool clamped = false;
};

Json to_json(const ProxyScore& p);
ProxyScore proxy_score_from_json(const Json& j);

/// f̂(a1 ≻ a2) = sgn(p(a1) - p(a2)); throws ProxyError on a kind mismatch.
int silver_pref(const ProxyScore& p1, const ProxyScore& p2);

/// Fraction of blanks filled correctly, from either the blank values or the
/// chosen option's blanks.
ProxyScore proxy_kc(const ExtractedAnswer& answer, const TaskInstance& task);

/// 1 - |w_a - w_gt| / (w_worst - w_gt) with w_a recomputed from the stated
/// node sequence. Incoherent paths score 0 with `invalid_path` set.
ProxyScore proxy_sp(const PathAnswer& answer, const GraphSpec& graph, const PathValue& truth);

/// 1 - |f_gt - f_a| / f_gt, clamped to [0, 1].
ProxyScore proxy_mf(double f_a, double f_gt);

/// -|v_a - v_gt|.
ProxyScore proxy_nl(double v_a, double v_gt);

/// Model-based scorer returning a score in [0, 1] for (question, answer).
class ExternalScorer {
public:
    virtual ~ExternalScorer() = default;
    virtual double score(const std::string& question, const std::string& answer) = 0;
};

/// Replays recorded scores keyed by (SHA-256 of question, SHA-256 of answer).
class FixtureScorer : public ExternalScorer {
public:
    explicit FixtureScorer(const std::vector<Json>& records);
    static std::unique_ptr<FixtureScorer> from_file(const std::filesystem::path& path);

    double score(const std::string& question, const std::string& answer) override;

    static Json record(const std::string& question, const std::string& answer, double score);

private:
    std::map<std::pair<std::string, std::string>, double> scores_;
};

/// Live scorer behind the gateway: one prompt per (question, answer); the
/// completion must be a single number in [0, 1].
class TransportScorer : public ExternalScorer {
public:
    TransportScorer(const Gateway& gateway, JudgeConfig config) : gateway_(gateway), config_(std::move(config)) {}

    double score(const std::string& question, const std::string& answer) override;

    static std::string render_prompt(const std::string& question, const std::string& answer);

private:
    const Gateway& gateway_;
    JudgeConfig config_;
};

/// Memoizes another scorer by content hash. Concurrent requests for the
/// same pair share one underlying call.
class CachingScorer : public ExternalScorer {
public:
    explicit CachingScorer(ExternalScorer& inner) : inner_(inner) {}

    double score(const std::string& question, const std::string& answer) override;

    std::size_t inner_calls() const { return inner_calls_.load(); }

private:
    ExternalScorer& inner_;
    std::mutex mutex_;
    std::map<std::string, std::shared_future<double>> cache_;
    std::atomic<std::size_t> inner_calls_{0};
};

/// External proxy for bg (FActScore-like) or cs (Vera-like) answers.
ProxyScore proxy_external(ProxyKind kind, const std::string& question, const std::string& answer,
                          ExternalScorer* scorer);

struct ProxyContext {
    ExternalScorer* scorer = nullptr;
    /// Proxy for scalar graph answers (mf, matching, generic): mf or nl.
    ProxyKind scalar_kind = ProxyKind::mf;
};

ProxyKind proxy_kind_for(const TaskInstance& task, const ProxyContext& ctx);

/// Dispatches to the domain's proxy. `raw_text` is the full completion, used
/// by the external kinds.
ProxyScore proxy_for(const TaskInstance& task, const ExtractedAnswer& answer, const std::string& raw_text,
                     const ProxyContext& ctx);

/// Exact match for kc/sp/mf/nl; score > 0.9 for bg; argmax plausibility
/// (or the pinned option) for cs.
bool is_correct(const TaskInstance& task, const ExtractedAnswer& answer, const std::string& raw_text,
                const ProxyContext& ctx);

inline constexpr double kExternalCorrectThreshold = 0.9;

}  // namespace wow
