#pragma once

#include "wow/diagnostics.hpp"
#include "wow/gateway.hpp"
#include "wow/proxy.hpp"

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wow {

enum class Method { heuristic, consistency, logits, pairwise, score, oracle };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Identifies one sampled answer within a task.
struct AnswerRef {
    std::string generator;
    int sample_index = 0;

    auto operator<=>(const AnswerRef&) const = default;
};

AnswerRef ref_of(const GenerationRecord& r);
std::string to_string(const AnswerRef& r);

struct SilverLabel {
    int direction = 0;
    ProxyScore first;
    ProxyScore second;
};

/// One elicited comparison of (first, second). Directions are from the
/// first answer's point of view: 1 means first is less wrong.
struct PreferenceJudgement {
    std::string task_id;
    AnswerRef first;
    AnswerRef second;
    Method method = Method::heuristic;
    int direction = 0;
    /// Method payload: lengths, sr values, NLLs, verdicts, scores.
    Json raw = Json::object();
    std::string evaluator;
    /// Empty when the judgement stands; otherwise "margin", "inconsistent"
    /// or "unscored". Filtered judgements always have direction 0.
    std::string filtered;
    /// Strength of the comparison in the method's own units.
    std::optional<double> margin;
    std::optional<SilverLabel> silver;

    bool consistency_filtered() const { return filtered == "inconsistent"; }
};

Json to_json(const PreferenceJudgement& j);
PreferenceJudgement judgement_from_json(const Json& j);
std::vector<PreferenceJudgement> read_judgements(const std::filesystem::path& path);
void write_judgements(const std::filesystem::path& path, const std::vector<PreferenceJudgement>& judgements);

/// Keep only comparisons whose absolute margin is strictly above the
/// nearest-rank (100 - m)-th percentile of the run's margins.
struct MarginFilter {
    int m = 100;
    /// nullopt: no filtering (m = 100, or not yet computed).
    std::optional<double> threshold;

    bool passes(double margin) const { return !threshold || margin > *threshold; }
    void validate() const;
};

/// Nearest-rank (100 - m)-th percentile; nullopt for m = 100.
std::optional<double> compute_margin_threshold(std::span<const double> margins, int m);

// --- preference functions -----------------------------------------------------

/// Character (code point) count of a UTF-8 string.
std::size_t text_length(std::string_view text);

PreferenceJudgement pref_heuristic(std::string_view a1_text, std::string_view a2_text);

struct ConsistencyScores {
    /// normalized key -> sr
    std::map<std::string, double> sr;
    int parseable = 0;
    int excluded = 0;
};

/// sr(a) = share of parseable samples with the same normalized key.
/// Unparseable samples are excluded from the denominator.
ConsistencyScores consistency_scores(std::span<const GenerationRecord> records);
ConsistencyScores consistency_scores(std::span<const GenerationRecord* const> records);

PreferenceJudgement pref_consistency(Domain domain, const GenerationRecord& a1, const GenerationRecord& a2,
                                     const ConsistencyScores& scores);

/// -Σ log p_t over every completion token.
double nll(const GenerationRecord& record);
double nll(std::span<const double> token_logprobs);

PreferenceJudgement pref_logits(const GenerationRecord& r1, const GenerationRecord& r2);

/// PC value of one verdict: +1 when the first shown output wins.
int verdict_value(Verdict v);

/// Combines the verdict on (a1, a2) with the verdict on the flipped
/// presentation (a2, a1). f = ½(PC12 - PC21); anything short of a
/// consistent verdict pair gives direction 0 and is marked inconsistent.
PreferenceJudgement combine_pairwise(Verdict v12, Verdict v21);

std::string render_pairwise_prompt(const std::string& question, const std::string& output_1,
                                   const std::string& output_2);

/// Renders the score prompt; its response count adapts to the batch size.
std::string render_score_prompt(const std::string& question, const std::vector<std::string>& answers);

/// One judge call for a batch of 1..batch_limit answers; on a parse failure
/// the call is retried once, then BatchDiscarded is thrown.
std::vector<int> score_batch(const std::string& question, const std::vector<std::string>& answers,
                             const JudgeConfig& judge_config, const Gateway& gateway, int batch_limit = 5);

PreferenceJudgement pref_score(int s1, int s2, const MarginFilter& filter);

PreferenceJudgement pref_pairwise(const std::string& question, const std::string& a1, const std::string& a2,
                                  const JudgeConfig& judge_config, const Gateway& gateway);

/// How an answer is shown to a judge: the completion, plus the chosen
/// option's text for multiple-choice tasks, since each sample saw its own
/// option order.
std::string judge_view(const TaskInstance& task, const GenerationRecord& record);

// --- run-level elicitation -------------------------------------------------------

/// All answers of one task that take part in a run.
struct TaskAnswers {
    const TaskInstance* task = nullptr;
    /// Every sample of the task, parseable or not.
    std::vector<const GenerationRecord*> samples;
    /// The wrong answers whose pairs will be judged.
    std::vector<const GenerationRecord*> wrong;
    /// Silver proxy per wrong answer (aligned with `wrong`), when computable.
    std::vector<std::optional<ProxyScore>> wrong_proxy;
    /// Answers that pass the correctness check.
    std::vector<const GenerationRecord*> correct;
};

struct PairToJudge {
    const TaskAnswers* task = nullptr;
    int first = 0;   // index into task->wrong
    int second = 0;  // index into task->wrong
};

struct ElicitConfig {
    Method method = Method::score;
    JudgeConfig judge;
    int margin = 100;
    int batch_size = 5;

    void validate() const;
};

ElicitConfig elicit_config_from_json(const Json& j);
Json to_json(const ElicitConfig& c);

class Elicitor {
public:
    virtual ~Elicitor() = default;
    virtual Method method() const = 0;
    virtual std::string evaluator() const = 0;

    /// Barrier stage: sees the whole run before any pair is judged.
    virtual void prepare(const std::vector<TaskAnswers>& run, Diagnostics& diagnostics);

    /// Judges every pair; output is aligned with `pairs`.
    virtual std::vector<PreferenceJudgement> judge(const std::vector<PairToJudge>& pairs,
                                                   Diagnostics& diagnostics) = 0;

    /// Audit records of judge calls made during `prepare` (score batches).
    virtual std::vector<Json> audit_log() const { return {}; }
};

/// `gateway` is needed for the pairwise and score methods only.
std::unique_ptr<Elicitor> make_elicitor(const ElicitConfig& config, const Gateway* gateway);

/// Reference judge returning the silver preference itself.
std::unique_ptr<Elicitor> make_oracle_elicitor();

}  // namespace wow
