#include "wow/elicit.hpp"

#include "wow/errors.hpp"
#include "wow/hash.hpp"
#include "wow/templates.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace wow {

namespace {

constexpr std::string_view kMethodNames[] = {"heuristic", "consistency", "logits", "pairwise", "score", "oracle"};

int sign(double x) { return (x > 0) - (x < 0); }

std::string count_word(std::size_t n) {
    static constexpr std::string_view words[] = {"zero", "one", "two",   "three", "four", "five",
                                                 "six",  "seven", "eight", "nine",  "ten"};
    return n < std::size(words) ? std::string(words[n]) : std::to_string(n);
}

Json ref_json(const AnswerRef& r) { return Json{{"generator", r.generator}, {"sample_index", r.sample_index}}; }

AnswerRef ref_from_json(const Json& j) {
    return AnswerRef{j.at("generator").get<std::string>(), j.at("sample_index").get<int>()};
}

PreferenceJudgement base_judgement(Method method, double diff, Json raw) {
    PreferenceJudgement j;
    j.method = method;
    j.direction = sign(diff);
    j.margin = std::fabs(diff);
    j.raw = std::move(raw);
    return j;
}

/// Runs judge requests, re-asking the ones `needs_retry` rejects once more
/// with slot 1. Transport failures surface as GatewayError, lowest index first.
struct JudgeRound {
    std::vector<std::string> texts;
    std::vector<int> attempts;
};

JudgeRound run_judge_requests(const std::vector<std::string>& prompts, const JudgeConfig& config,
                              const Gateway& gateway, const std::function<bool(std::size_t, const std::string&)>& ok) {
    JudgeRound round;
    round.texts.resize(prompts.size());
    round.attempts.assign(prompts.size(), 0);
    std::vector<std::size_t> pending(prompts.size());
    for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;

    for (std::uint64_t slot = 0; slot < 2 && !pending.empty(); ++slot) {
        std::vector<ChatRequest> requests;
        requests.reserve(pending.size());
        for (auto i : pending) {
            auto req = make_judge_request(prompts[i], config);
            req.slot = slot;
            requests.push_back(std::move(req));
        }
        std::vector<std::exception_ptr> errors(requests.size());
        std::mutex mutex;
        gateway.dispatch(requests, [&](std::size_t k, const ChatResponse* response, std::exception_ptr error) {
            std::lock_guard lock(mutex);
            if (error) {
                errors[k] = error;
            } else if (response->choices.empty()) {
                errors[k] = std::make_exception_ptr(GatewayError("judge returned no choices"));
            } else {
                round.texts[pending[k]] = response->choices.front().text;
            }
        });
        for (auto& e : errors) {
            if (!e) continue;
            try {
                std::rethrow_exception(e);
            } catch (const TransportError& te) {
                throw GatewayError(te.what());
            }
        }
        std::vector<std::size_t> next;
        for (auto i : pending) {
            ++round.attempts[i];
            if (!ok(i, round.texts[i])) next.push_back(i);
        }
        pending = std::move(next);
    }
    return round;
}

}  // namespace

std::string_view to_string(Method m) { return kMethodNames[static_cast<int>(m)]; }

Method parse_method(std::string_view name) {
    for (int i = 0; i < 6; ++i)
        if (kMethodNames[i] == name) return static_cast<Method>(i);
    throw ConfigError("unknown elicitation method '" + std::string(name) + "'");
}

AnswerRef ref_of(const GenerationRecord& r) { return AnswerRef{r.generator, r.sample_index}; }

std::string to_string(const AnswerRef& r) { return r.generator + "#" + std::to_string(r.sample_index); }

Json to_json(const PreferenceJudgement& j) {
    Json out;
    out["task_id"] = j.task_id;
    out["first"] = ref_json(j.first);
    out["second"] = ref_json(j.second);
    out["method"] = to_string(j.method);
    out["evaluator"] = j.evaluator;
    out["direction"] = j.direction;
    if (!j.filtered.empty()) out["filtered"] = j.filtered;
    if (j.method == Method::pairwise) out["consistency_filtered"] = j.consistency_filtered();
    out["margin"] = j.margin ? Json(*j.margin) : Json(nullptr);
    out["raw"] = j.raw;
    if (j.silver) {
        out["silver"] = Json{{"direction", j.silver->direction},
                             {"first", to_json(j.silver->first)},
                             {"second", to_json(j.silver->second)}};
    }
    return out;
}

PreferenceJudgement judgement_from_json(const Json& in) {
    try {
        PreferenceJudgement j;
        j.task_id = in.at("task_id").get<std::string>();
        j.first = ref_from_json(in.at("first"));
        j.second = ref_from_json(in.at("second"));
        j.method = parse_method(in.at("method").get<std::string>());
        j.evaluator = in.at("evaluator").get<std::string>();
        j.direction = in.at("direction").get<int>();
        if (j.direction < -1 || j.direction > 1) throw SchemaError("direction must be -1, 0 or 1");
        j.filtered = in.value("filtered", std::string());
        if (!in.at("margin").is_null()) j.margin = in.at("margin").get<double>();
        j.raw = in.at("raw");
        if (in.contains("silver")) {
            const auto& s = in.at("silver");
            j.silver = SilverLabel{s.at("direction").get<int>(), proxy_score_from_json(s.at("first")),
                                   proxy_score_from_json(s.at("second"))};
        }
        return j;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad judgement record: ") + e.what());
    } catch (const ConfigError& e) {
        throw SchemaError(e.what());
    }
}

std::vector<PreferenceJudgement> read_judgements(const std::filesystem::path& path) {
    std::vector<PreferenceJudgement> out;
    std::size_t line = 0;
    for (const auto& j : read_jsonl(path)) {
        ++line;
        try {
            out.push_back(judgement_from_json(j));
        } catch (const SchemaError& e) {
            throw IngestError(line, e.what());
        }
    }
    return out;
}

void write_judgements(const std::filesystem::path& path, const std::vector<PreferenceJudgement>& judgements) {
    std::vector<Json> rows;
    rows.reserve(judgements.size());
    for (const auto& j : judgements) rows.push_back(to_json(j));
    write_jsonl(path, rows);
}

// --- margin filter ----------------------------------------------------------------

void MarginFilter::validate() const {
    if (m < 1 || m > 100) throw ConfigError("margin m must be in 1..100, got " + std::to_string(m));
}

std::optional<double> compute_margin_threshold(std::span<const double> margins, int m) {
    MarginFilter{m, {}}.validate();
    if (m == 100) return std::nullopt;
    if (margins.empty()) throw EmptyInput("margin threshold needs at least one margin");
    std::vector<double> sorted(margins.begin(), margins.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const auto p = static_cast<std::size_t>(100 - m);
    std::size_t rank = (p * n + 99) / 100;
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

// --- preference functions -----------------------------------------------------------

std::size_t text_length(std::string_view text) {
    std::size_t n = 0;
    for (unsigned char c : text)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

PreferenceJudgement pref_heuristic(std::string_view a1_text, std::string_view a2_text) {
    const auto l1 = text_length(a1_text);
    const auto l2 = text_length(a2_text);
    return base_judgement(Method::heuristic, static_cast<double>(l1) - static_cast<double>(l2),
                          Json{{"len_1", l1}, {"len_2", l2}});
}

ConsistencyScores consistency_scores(std::span<const GenerationRecord* const> records) {
    ConsistencyScores out;
    std::map<std::string, int> counts;
    for (const auto* r : records) {
        if (r->extracted) {
            ++counts[normalize_key(*r->extracted)];
            ++out.parseable;
        } else {
            ++out.excluded;
        }
    }
    if (out.parseable == 0) throw ConsistencyUnavailable("every sample is unparseable");
    for (const auto& [key, c] : counts) out.sr[key] = static_cast<double>(c) / out.parseable;
    return out;
}

ConsistencyScores consistency_scores(std::span<const GenerationRecord> records) {
    std::vector<const GenerationRecord*> ptrs;
    ptrs.reserve(records.size());
    for (const auto& r : records) ptrs.push_back(&r);
    return consistency_scores(std::span<const GenerationRecord* const>(ptrs));
}

PreferenceJudgement pref_consistency(Domain domain, const GenerationRecord& a1, const GenerationRecord& a2,
                                     const ConsistencyScores& scores) {
    if (domain == Domain::bg) throw NotApplicable("repetition cannot be computed for open-ended generations");
    if (!a1.extracted || !a2.extracted) throw ConsistencyUnavailable("both answers must be parseable");
    const auto k1 = normalize_key(*a1.extracted);
    const auto k2 = normalize_key(*a2.extracted);
    const auto i1 = scores.sr.find(k1);
    const auto i2 = scores.sr.find(k2);
    if (i1 == scores.sr.end() || i2 == scores.sr.end())
        throw ConsistencyUnavailable("answer key missing from the repetition scores");
    return base_judgement(Method::consistency, i1->second - i2->second,
                          Json{{"key_1", k1}, {"key_2", k2}, {"sr_1", i1->second}, {"sr_2", i2->second}});
}

double nll(std::span<const double> token_logprobs) {
    double sum = 0.0;
    for (double lp : token_logprobs) sum -= lp;
    return sum;
}

double nll(const GenerationRecord& record) {
    if (!record.token_logprobs)
        throw LogitsUnavailable("no token log-probabilities for " + record.task_id + " sample " +
                                std::to_string(record.sample_index));
    return nll(std::span<const double>(*record.token_logprobs));
}

PreferenceJudgement pref_logits(const GenerationRecord& r1, const GenerationRecord& r2) {
    const double n1 = nll(r1);
    const double n2 = nll(r2);
    return base_judgement(Method::logits, n2 - n1, Json{{"nll_1", n1}, {"nll_2", n2}});
}

int verdict_value(Verdict v) {
    switch (v) {
        case Verdict::output1: return 1;
        case Verdict::output2: return -1;
        case Verdict::invalid: return 0;
    }
    return 0;
}

PreferenceJudgement combine_pairwise(Verdict v12, Verdict v21) {
    const int pc12 = verdict_value(v12);
    const int pc21 = verdict_value(v21);
    const double f = 0.5 * (pc12 - pc21);
    PreferenceJudgement j;
    j.method = Method::pairwise;
    j.direction = std::fabs(f) == 1.0 ? sign(f) : 0;
    if (j.direction == 0) j.filtered = "inconsistent";
    j.margin = std::fabs(f);
    j.raw = Json{{"verdict_12", to_string(v12)}, {"verdict_21", to_string(v21)},
                 {"pc_12", pc12},                {"pc_21", pc21},
                 {"f", f}};
    return j;
}

std::string render_pairwise_prompt(const std::string& question, const std::string& output_1,
                                   const std::string& output_2) {
    return render(TemplateId::pairwise, {{"question", question}, {"output_1", output_1}, {"output_2", output_2}});
}

std::string render_score_prompt(const std::string& question, const std::vector<std::string>& answers) {
    if (answers.empty()) throw EmptyInput("score prompt needs at least one response");
    std::string block;
    for (std::size_t k = 0; k < answers.size(); ++k) {
        if (k) block += "\n";
        block += "Response " + std::to_string(k + 1) + ":\n" + answers[k];
    }
    return render(TemplateId::score,
                  {{"count_word", count_word(answers.size())}, {"question", question}, {"responses", block}});
}

std::vector<int> score_batch(const std::string& question, const std::vector<std::string>& answers,
                             const JudgeConfig& judge_config, const Gateway& gateway, int batch_limit) {
    if (answers.empty() || static_cast<int>(answers.size()) > batch_limit)
        throw ConfigError("score batch size must be in 1.." + std::to_string(batch_limit));
    const auto prompt = render_score_prompt(question, answers);
    std::string last_error;
    for (std::uint64_t slot = 0; slot < 2; ++slot) {
        auto req = make_judge_request(prompt, judge_config);
        req.slot = slot;
        ChatResponse response;
        try {
            response = gateway.call(req, fnv1a64(prompt) + slot);
        } catch (const TransportError& e) {
            throw GatewayError(e.what());
        }
        if (response.choices.empty()) throw GatewayError("judge returned no choices");
        try {
            return parse_scores(response.choices.front().text, static_cast<int>(answers.size()));
        } catch (const ScoreParseError& e) {
            last_error = e.what();
        }
    }
    throw BatchDiscarded("score batch unparseable after one retry: " + last_error);
}

PreferenceJudgement pref_score(int s1, int s2, const MarginFilter& filter) {
    auto j = base_judgement(Method::score, static_cast<double>(s1 - s2), Json{{"score_1", s1}, {"score_2", s2}});
    j.raw["threshold"] = filter.threshold ? Json(*filter.threshold) : Json(nullptr);
    if (!filter.passes(*j.margin)) {
        j.direction = 0;
        j.filtered = "margin";
    }
    return j;
}

PreferenceJudgement pref_pairwise(const std::string& question, const std::string& a1, const std::string& a2,
                                  const JudgeConfig& judge_config, const Gateway& gateway) {
    const std::vector<std::string> prompts = {render_pairwise_prompt(question, a1, a2),
                                              render_pairwise_prompt(question, a2, a1)};
    const auto round = run_judge_requests(prompts, judge_config, gateway, [](std::size_t, const std::string& text) {
        return parse_pairwise_verdict(text) != Verdict::invalid;
    });
    auto j = combine_pairwise(parse_pairwise_verdict(round.texts[0]), parse_pairwise_verdict(round.texts[1]));
    j.evaluator = judge_config.evaluator_name;
    j.raw["judge_text_12"] = round.texts[0];
    j.raw["judge_text_21"] = round.texts[1];
    j.raw["attempts"] = round.attempts;
    return j;
}

std::string judge_view(const TaskInstance& task, const GenerationRecord& record) {
    if (!task.is_multiple_choice() || !record.extracted) return record.raw_text;
    const auto* opt = std::get_if<OptionChoice>(&*record.extracted);
    if (!opt || opt->index < 0 || opt->index >= static_cast<int>(task.options.size())) return record.raw_text;
    return record.raw_text + "\n[Chosen option: " + task.options[opt->index] + "]";
}

// --- run-level elicitation -------------------------------------------------------------

void ElicitConfig::validate() const {
    MarginFilter{margin, {}}.validate();
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (method == Method::pairwise && margin != 100)
        throw ConfigError("the margin filter does not apply to pairwise comparison");
}

ElicitConfig elicit_config_from_json(const Json& j) {
    ElicitConfig c;
    c.method = parse_method(j.value("method", std::string("score")));
    c.margin = j.value("margin", 100);
    c.batch_size = j.value("batch_size", 5);
    if (j.contains("judge")) {
        const auto& jj = j.at("judge");
        c.judge.evaluator_name = jj.value("name", c.judge.evaluator_name);
        c.judge.model_name = jj.value("model", c.judge.model_name);
        c.judge.temperature = jj.value("temperature", c.judge.temperature);
        c.judge.max_tokens = jj.value("max_tokens", c.judge.max_tokens);
    }
    c.validate();
    return c;
}

Json to_json(const ElicitConfig& c) {
    return Json{{"method", to_string(c.method)},
                {"margin", c.margin},
                {"batch_size", c.batch_size},
                {"judge",
                 {{"name", c.judge.evaluator_name},
                  {"model", c.judge.model_name},
                  {"temperature", c.judge.temperature},
                  {"max_tokens", c.judge.max_tokens}}}};
}

void Elicitor::prepare(const std::vector<TaskAnswers>&, Diagnostics&) {}

namespace {

/// Methods whose comparison is a pure function once the barrier stage has
/// run. The margin filter threshold is computed over every pair in the run.
class PureElicitor : public Elicitor {
public:
    explicit PureElicitor(int margin) : filter_{margin, {}} {}

    void prepare(const std::vector<TaskAnswers>& run, Diagnostics& diagnostics) override {
        if (filter_.m == 100) return;
        std::vector<double> margins;
        for (const auto& t : run)
            for (int i = 0; i < static_cast<int>(t.wrong.size()); ++i)
                for (int k = i + 1; k < static_cast<int>(t.wrong.size()); ++k) {
                    const auto j = compare(t, i, k);
                    if (j.filtered.empty() && j.margin) margins.push_back(*j.margin);
                }
        if (margins.empty()) {
            diagnostics.warn("EmptyMargins", "no comparable pairs; margin threshold left unset");
            return;
        }
        filter_.threshold = compute_margin_threshold(margins, filter_.m);
        diagnostics.count("elicit.margin_pairs", static_cast<long long>(margins.size()));
    }

    std::vector<PreferenceJudgement> judge(const std::vector<PairToJudge>& pairs, Diagnostics& diagnostics) override {
        std::vector<PreferenceJudgement> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) {
            auto j = compare(*p.task, p.first, p.second);
            j.task_id = p.task->task->id;
            j.first = ref_of(*p.task->wrong[p.first]);
            j.second = ref_of(*p.task->wrong[p.second]);
            j.evaluator = evaluator();
            if (j.filtered.empty() && j.margin && !filter_.passes(*j.margin)) {
                j.direction = 0;
                j.filtered = "margin";
            }
            if (filter_.m != 100) j.raw["threshold"] = filter_.threshold ? Json(*filter_.threshold) : Json(nullptr);
            if (!j.filtered.empty()) diagnostics.count("elicit.filtered." + j.filtered);
            out.push_back(std::move(j));
        }
        return out;
    }

protected:
    virtual PreferenceJudgement compare(const TaskAnswers& t, int i, int k) const = 0;

    MarginFilter filter_;
};

class HeuristicElicitor final : public PureElicitor {
public:
    using PureElicitor::PureElicitor;
    Method method() const override { return Method::heuristic; }
    std::string evaluator() const override { return "length"; }

protected:
    PreferenceJudgement compare(const TaskAnswers& t, int i, int k) const override {
        return pref_heuristic(t.wrong[i]->raw_text, t.wrong[k]->raw_text);
    }
};

class ConsistencyElicitor final : public PureElicitor {
public:
    ConsistencyElicitor(int margin, std::string generator_label)
        : PureElicitor(margin), label_(std::move(generator_label)) {}
    Method method() const override { return Method::consistency; }
    std::string evaluator() const override { return label_; }

    void prepare(const std::vector<TaskAnswers>& run, Diagnostics& diagnostics) override {
        for (const auto& t : run) {
            if (t.wrong.size() < 2) continue;
            if (t.task->domain == Domain::bg)
                throw NotApplicable("repetition cannot be computed for open-ended task '" + t.task->id + "'");
            auto s = consistency_scores(std::span<const GenerationRecord* const>(t.samples));
            diagnostics.count("elicit.consistency_excluded", s.excluded);
            scores_.emplace(t.task->id, std::move(s));
        }
        PureElicitor::prepare(run, diagnostics);
    }

protected:
    PreferenceJudgement compare(const TaskAnswers& t, int i, int k) const override {
        const auto& s = scores_.at(t.task->id);
        auto j = pref_consistency(t.task->domain, *t.wrong[i], *t.wrong[k], s);
        j.raw["parseable"] = s.parseable;
        return j;
    }

private:
    std::string label_;
    std::map<std::string, ConsistencyScores> scores_;
};

class LogitsElicitor final : public PureElicitor {
public:
    LogitsElicitor(int margin, std::string label) : PureElicitor(margin), label_(std::move(label)) {}
    Method method() const override { return Method::logits; }
    std::string evaluator() const override { return label_; }

    void prepare(const std::vector<TaskAnswers>& run, Diagnostics& diagnostics) override {
        for (const auto& t : run)
            if (t.wrong.size() >= 2)
                for (const auto* r : t.wrong) (void)nll(*r);
        PureElicitor::prepare(run, diagnostics);
    }

protected:
    PreferenceJudgement compare(const TaskAnswers& t, int i, int k) const override {
        return pref_logits(*t.wrong[i], *t.wrong[k]);
    }

private:
    std::string label_;
};

class ScoreElicitor final : public PureElicitor {
public:
    ScoreElicitor(const ElicitConfig& config, const Gateway& gateway)
        : PureElicitor(config.margin), config_(config), gateway_(gateway) {}
    Method method() const override { return Method::score; }
    std::string evaluator() const override { return config_.judge.evaluator_name; }

    void prepare(const std::vector<TaskAnswers>& run, Diagnostics& diagnostics) override {
        struct Batch {
            const TaskAnswers* task;
            std::size_t begin;
            std::size_t end;
        };
        std::vector<Batch> batches;
        std::vector<std::string> prompts;
        const auto b = static_cast<std::size_t>(config_.batch_size);
        for (const auto& t : run) {
            if (t.wrong.size() < 2) continue;
            const auto question = render_question(*t.task);
            for (std::size_t s = 0; s < t.wrong.size(); s += b) {
                const auto e = std::min(t.wrong.size(), s + b);
                std::vector<std::string> answers;
                for (auto i = s; i < e; ++i) answers.push_back(judge_view(*t.task, *t.wrong[i]));
                batches.push_back({&t, s, e});
                prompts.push_back(render_score_prompt(question, answers));
            }
        }
        const auto round = run_judge_requests(prompts, config_.judge, gateway_, [&](std::size_t i, const std::string& text) {
            try {
                parse_scores(text, static_cast<int>(batches[i].end - batches[i].begin));
                return true;
            } catch (const ScoreParseError&) {
                return false;
            }
        });
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& batch = batches[bi];
            Json log{{"task_id", batch.task->task->id},
                     {"batch", bi},
                     {"prompt_sha256", sha256_hex(prompts[bi])},
                     {"attempts", round.attempts[bi]},
                     {"judge_text", round.texts[bi]}};
            try {
                const auto scores = parse_scores(round.texts[bi], static_cast<int>(batch.end - batch.begin));
                for (auto i = batch.begin; i < batch.end; ++i)
                    scores_[{batch.task->task->id, i}] = {scores[i - batch.begin], static_cast<int>(bi)};
                log["scores"] = scores;
            } catch (const ScoreParseError& e) {
                diagnostics.warn("BatchDiscarded", "task '" + batch.task->task->id + "' batch " + std::to_string(bi) +
                                                       ": " + e.what());
                diagnostics.count("elicit.discarded_batches");
                log["discarded"] = e.what();
            }
            log_.push_back(std::move(log));
        }
        PureElicitor::prepare(run, diagnostics);
    }

    std::vector<Json> audit_log() const override { return log_; }

protected:
    PreferenceJudgement compare(const TaskAnswers& t, int i, int k) const override {
        const auto a = scores_.find({t.task->id, static_cast<std::size_t>(i)});
        const auto b = scores_.find({t.task->id, static_cast<std::size_t>(k)});
        if (a == scores_.end() || b == scores_.end()) {
            PreferenceJudgement j;
            j.method = Method::score;
            j.filtered = "unscored";
            return j;
        }
        auto j = pref_score(a->second.first, b->second.first, MarginFilter{});
        j.raw.erase("threshold");
        j.raw["batch_1"] = a->second.second;
        j.raw["batch_2"] = b->second.second;
        return j;
    }

private:
    ElicitConfig config_;
    const Gateway& gateway_;
    std::map<std::pair<std::string, std::size_t>, std::pair<int, int>> scores_;
    std::vector<Json> log_;
};

class PairwiseElicitor final : public Elicitor {
public:
    PairwiseElicitor(const ElicitConfig& config, const Gateway& gateway) : config_(config), gateway_(gateway) {}
    Method method() const override { return Method::pairwise; }
    std::string evaluator() const override { return config_.judge.evaluator_name; }

    std::vector<PreferenceJudgement> judge(const std::vector<PairToJudge>& pairs, Diagnostics& diagnostics) override {
        std::vector<std::string> prompts;
        prompts.reserve(pairs.size() * 2);
        for (const auto& p : pairs) {
            const auto& task = *p.task->task;
            const auto question = render_question(task);
            const auto a1 = judge_view(task, *p.task->wrong[p.first]);
            const auto a2 = judge_view(task, *p.task->wrong[p.second]);
            prompts.push_back(render_pairwise_prompt(question, a1, a2));
            prompts.push_back(render_pairwise_prompt(question, a2, a1));
        }
        const auto round = run_judge_requests(prompts, config_.judge, gateway_, [](std::size_t, const std::string& text) {
            return parse_pairwise_verdict(text) != Verdict::invalid;
        });
        std::vector<PreferenceJudgement> out;
        out.reserve(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& t12 = round.texts[2 * i];
            const auto& t21 = round.texts[2 * i + 1];
            auto j = combine_pairwise(parse_pairwise_verdict(t12), parse_pairwise_verdict(t21));
            j.task_id = pairs[i].task->task->id;
            j.first = ref_of(*pairs[i].task->wrong[pairs[i].first]);
            j.second = ref_of(*pairs[i].task->wrong[pairs[i].second]);
            j.evaluator = evaluator();
            j.raw["judge_text_12"] = t12;
            j.raw["judge_text_21"] = t21;
            j.raw["attempts"] = {round.attempts[2 * i], round.attempts[2 * i + 1]};
            if (!j.filtered.empty()) diagnostics.count("elicit.filtered." + j.filtered);
            out.push_back(std::move(j));
        }
        return out;
    }

private:
    ElicitConfig config_;
    const Gateway& gateway_;
};

class OracleElicitor final : public PureElicitor {
public:
    OracleElicitor() : PureElicitor(100) {}
    Method method() const override { return Method::oracle; }
    std::string evaluator() const override { return "silver"; }

protected:
    PreferenceJudgement compare(const TaskAnswers& t, int i, int k) const override {
        const auto& p1 = t.wrong_proxy[i];
        const auto& p2 = t.wrong_proxy[k];
        if (!p1 || !p2) {
            PreferenceJudgement j;
            j.method = Method::oracle;
            j.filtered = "unscored";
            return j;
        }
        auto j = base_judgement(Method::oracle, p1->value - p2->value,
                                Json{{"proxy_1", p1->value}, {"proxy_2", p2->value}});
        j.direction = silver_pref(*p1, *p2);
        return j;
    }
};

std::string generator_label(const ElicitConfig& c) {
    return c.judge.evaluator_name.empty() ? std::string("self") : c.judge.evaluator_name;
}

}  // namespace

std::unique_ptr<Elicitor> make_elicitor(const ElicitConfig& config, const Gateway* gateway) {
    config.validate();
    switch (config.method) {
        case Method::heuristic: return std::make_unique<HeuristicElicitor>(config.margin);
        case Method::consistency: return std::make_unique<ConsistencyElicitor>(config.margin, generator_label(config));
        case Method::logits: return std::make_unique<LogitsElicitor>(config.margin, generator_label(config));
        case Method::oracle: return make_oracle_elicitor();
        case Method::pairwise:
        case Method::score:
            if (!gateway) throw ConfigError("method '" + std::string(to_string(config.method)) + "' needs a judge endpoint");
            if (config.method == Method::pairwise) return std::make_unique<PairwiseElicitor>(config, *gateway);
            return std::make_unique<ScoreElicitor>(config, *gateway);
    }
    throw ConfigError("unknown method");
}

std::unique_ptr<Elicitor> make_oracle_elicitor() { return std::make_unique<OracleElicitor>(); }

}  // namespace wow
