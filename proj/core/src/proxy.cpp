#include "wow/proxy.hpp"

#include "wow/errors.hpp"
#include "wow/hash.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace wow {

namespace {

constexpr std::string_view kKindNames[] = {"kc", "sp", "mf", "nl", "bg", "cs"};

ProxyScore bounded_score(double raw, ProxyKind kind) {
    ProxyScore p;
    p.kind = kind;
    p.bounded = true;
    p.value = std::clamp(raw, 0.0, 1.0);
    p.clamped = p.value != raw;
    return p;
}

int sign(double x) { return (x > 0) - (x < 0); }

std::string option_text(const TaskInstance& task, int index) {
    if (index < 0 || index >= static_cast<int>(task.options.size()))
        throw ProxyError("option index out of range for task '" + task.id + "'");
    return task.options[index];
}

}  // namespace

std::string_view to_string(ProxyKind k) { return kKindNames[static_cast<int>(k)]; }

ProxyKind parse_proxy_kind(std::string_view name) {
    for (int i = 0; i < 6; ++i)
        if (kKindNames[i] == name) return static_cast<ProxyKind>(i);
    throw SchemaError("unknown proxy kind '" + std::string(name) + "'");
}

Json to_json(const ProxyScore& p) {
    Json j;
    j["value"] = p.value;
    j["kind"] = to_string(p.kind);
    if (p.invalid_path) j["invalid_path"] = true;
    if (p.clamped) j["clamped"] = true;
    return j;
}

ProxyScore proxy_score_from_json(const Json& j) {
    ProxyScore p;
    p.value = j.at("value").get<double>();
    p.kind = parse_proxy_kind(j.at("kind").get<std::string>());
    p.bounded = p.kind != ProxyKind::nl;
    p.invalid_path = j.value("invalid_path", false);
    p.clamped = j.value("clamped", false);
    return p;
}

int silver_pref(const ProxyScore& p1, const ProxyScore& p2) {
    if (p1.kind != p2.kind)
        throw ProxyError("cannot compare proxy kinds " + std::string(to_string(p1.kind)) + " and " +
                         std::string(to_string(p2.kind)));
    return sign(p1.value - p2.value);
}

ProxyScore proxy_kc(const ExtractedAnswer& answer, const TaskInstance& task) {
    const auto* truth = std::get_if<BlanksFill>(&task.ground_truth);
    if (!truth || truth->blanks.empty()) throw ProxyError("task '" + task.id + "' has no blanks ground truth");
    std::vector<std::string> filled;
    if (const auto* opt = std::get_if<OptionChoice>(&answer)) {
        if (task.option_blanks.empty() || opt->index < 0 || opt->index >= static_cast<int>(task.option_blanks.size()))
            throw ProxyError("option " + option_letter(opt->index) + " of task '" + task.id +
                             "' has no resolvable blank values");
        filled = task.option_blanks[opt->index];
    } else if (const auto* blanks = std::get_if<BlanksAnswer>(&answer)) {
        filled = blanks->blanks;
    } else {
        throw ProxyError("kc proxy needs an option or blanks answer");
    }
    int correct = 0;
    for (std::size_t i = 0; i < truth->blanks.size() && i < filled.size(); ++i)
        if (normalize_text(filled[i]) == normalize_text(truth->blanks[i])) ++correct;
    return bounded_score(static_cast<double>(correct) / static_cast<double>(truth->blanks.size()), ProxyKind::kc);
}

ProxyScore proxy_sp(const PathAnswer& answer, const GraphSpec& graph, const PathValue& truth) {
    if (truth.w_worst <= truth.w_gt)
        throw ProxyError("degenerate shortest-path instance: w_worst == w_gt");
    const auto w_a = path_weight(graph, answer.nodes);
    const bool endpoints_ok = !answer.nodes.empty() && graph.source && graph.sink &&
                              answer.nodes.front() == *graph.source && answer.nodes.back() == *graph.sink;
    if (!w_a || !endpoints_ok) {
        ProxyScore p;
        p.kind = ProxyKind::sp;
        p.value = 0.0;
        p.invalid_path = true;
        return p;
    }
    const double raw = 1.0 - static_cast<double>(std::llabs(*w_a - truth.w_gt)) /
                                 static_cast<double>(truth.w_worst - truth.w_gt);
    return bounded_score(raw, ProxyKind::sp);
}

ProxyScore proxy_mf(double f_a, double f_gt) {
    if (f_gt <= 0) throw ProxyError("max-flow/matching proxy needs f_gt > 0");
    return bounded_score(1.0 - std::fabs(f_gt - f_a) / f_gt, ProxyKind::mf);
}

ProxyScore proxy_nl(double v_a, double v_gt) {
    ProxyScore p;
    p.kind = ProxyKind::nl;
    p.bounded = false;
    p.value = -std::fabs(v_a - v_gt);
    return p;
}

// --- external scorers -------------------------------------------------------

FixtureScorer::FixtureScorer(const std::vector<Json>& records) {
    std::size_t line = 0;
    for (const auto& r : records) {
        ++line;
        try {
            const double s = r.at("score").get<double>();
            if (s < 0.0 || s > 1.0) throw IngestError(line, "score outside [0, 1]");
            scores_[{r.at("question_hash").get<std::string>(), r.at("answer_hash").get<std::string>()}] = s;
        } catch (const Json::exception& e) {
            throw IngestError(line, std::string("bad scorer fixture: ") + e.what());
        }
    }
}

std::unique_ptr<FixtureScorer> FixtureScorer::from_file(const std::filesystem::path& path) {
    return std::make_unique<FixtureScorer>(read_jsonl(path));
}

Json FixtureScorer::record(const std::string& question, const std::string& answer, double score) {
    return Json{{"question_hash", sha256_hex(question)}, {"answer_hash", sha256_hex(answer)}, {"score", score}};
}

double FixtureScorer::score(const std::string& question, const std::string& answer) {
    const auto it = scores_.find({sha256_hex(question), sha256_hex(answer)});
    if (it == scores_.end()) throw ScorerUnavailable("no fixture score for this (question, answer)");
    return it->second;
}

std::string TransportScorer::render_prompt(const std::string& question, const std::string& answer) {
    return "Rate how well the answer is supported, as a single number between 0 and 1.\nQuestion:\n" + question +
           "\nAnswer:\n" + answer + "\nScore:";
}

double TransportScorer::score(const std::string& question, const std::string& answer) {
    std::string text;
    try {
        text = judge(render_prompt(question, answer), config_, gateway_, fnv1a64(question + answer));
    } catch (const GatewayError& e) {
        throw ScorerUnavailable(std::string("scorer endpoint failed: ") + e.what());
    }
    const auto first = text.find_first_not_of(" \t\r\n");
    const auto last = text.find_last_not_of(" \t\r\n.");
    if (first == std::string::npos) throw ProxyError("scorer returned an empty response");
    const auto token = text.substr(first, last - first + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || v < 0.0 || v > 1.0)
        throw ProxyError("scorer response '" + token + "' is not a score in [0, 1]");
    return v;
}

double CachingScorer::score(const std::string& question, const std::string& answer) {
    const auto key = sha256_hex(question) + ":" + sha256_hex(answer);
    std::promise<double> promise;
    std::shared_future<double> future;
    bool owner = false;
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            future = promise.get_future().share();
            cache_.emplace(key, future);
            owner = true;
        } else {
            future = it->second;
        }
    }
    if (owner) {
        try {
            ++inner_calls_;
            promise.set_value(inner_.score(question, answer));
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mutex_);
            cache_.erase(key);
        }
    }
    return future.get();
}

ProxyScore proxy_external(ProxyKind kind, const std::string& question, const std::string& answer,
                          ExternalScorer* scorer) {
    if (kind != ProxyKind::bg && kind != ProxyKind::cs) throw ProxyError("external proxies are bg or cs");
    if (!scorer) throw ScorerUnavailable("no external scorer configured");
    return bounded_score(scorer->score(question, answer), kind);
}

// --- dispatch -----------------------------------------------------------------

ProxyKind proxy_kind_for(const TaskInstance& task, const ProxyContext& ctx) {
    switch (task.domain) {
        case Domain::kc: return ProxyKind::kc;
        case Domain::sp: return ProxyKind::sp;
        case Domain::mf:
        case Domain::matching: return ctx.scalar_kind;
        case Domain::bg: return ProxyKind::bg;
        case Domain::com2: return ProxyKind::cs;
        case Domain::generic:
            if (std::holds_alternative<ScalarValue>(task.ground_truth))
                return ctx.scalar_kind == ProxyKind::mf ? ProxyKind::nl : ctx.scalar_kind;
            if (std::holds_alternative<BlanksFill>(task.ground_truth)) return ProxyKind::kc;
            return task.is_multiple_choice() ? ProxyKind::cs : ProxyKind::bg;
    }
    throw ProxyError("no proxy for task '" + task.id + "'");
}

ProxyScore proxy_for(const TaskInstance& task, const ExtractedAnswer& answer, const std::string& raw_text,
                     const ProxyContext& ctx) {
    const auto kind = proxy_kind_for(task, ctx);
    const auto question = render_question(task);
    switch (kind) {
        case ProxyKind::kc: return proxy_kc(answer, task);
        case ProxyKind::sp: {
            const auto* path = std::get_if<PathAnswer>(&answer);
            if (!path || !task.graph) throw ProxyError("sp proxy needs a path answer and a graph");
            return proxy_sp(*path, *task.graph, std::get<PathValue>(task.ground_truth));
        }
        case ProxyKind::mf:
        case ProxyKind::nl: {
            const auto* scalar = std::get_if<ScalarAnswer>(&answer);
            const auto* truth = std::get_if<ScalarValue>(&task.ground_truth);
            if (!scalar || !truth) throw ProxyError("scalar proxy needs a scalar answer and truth");
            return kind == ProxyKind::mf ? proxy_mf(scalar->value, truth->value) : proxy_nl(scalar->value, truth->value);
        }
        case ProxyKind::bg: return proxy_external(kind, question, raw_text, ctx.scorer);
        case ProxyKind::cs: {
            const auto* opt = std::get_if<OptionChoice>(&answer);
            if (!opt) throw ProxyError("cs proxy needs an option answer");
            return proxy_external(kind, question, option_text(task, opt->index), ctx.scorer);
        }
    }
    throw ProxyError("unreachable proxy kind");
}

bool is_correct(const TaskInstance& task, const ExtractedAnswer& answer, const std::string& raw_text,
                const ProxyContext& ctx) {
    const auto kind = proxy_kind_for(task, ctx);
    switch (kind) {
        case ProxyKind::kc: {
            const auto& truth = std::get<BlanksFill>(task.ground_truth);
            if (const auto* opt = std::get_if<OptionChoice>(&answer); opt && truth.correct_option >= 0)
                return opt->index == truth.correct_option;
            return proxy_kc(answer, task).value == 1.0;
        }
        case ProxyKind::sp: {
            const auto p = proxy_for(task, answer, raw_text, ctx);
            return !p.invalid_path && p.value == 1.0;
        }
        case ProxyKind::mf:
        case ProxyKind::nl: {
            const auto* scalar = std::get_if<ScalarAnswer>(&answer);
            if (!scalar) throw ProxyError("scalar correctness needs a scalar answer");
            return std::fabs(scalar->value - std::get<ScalarValue>(task.ground_truth).value) < 1e-9;
        }
        case ProxyKind::bg:
            return proxy_for(task, answer, raw_text, ctx).value > kExternalCorrectThreshold;
        case ProxyKind::cs: {
            const auto* opt = std::get_if<OptionChoice>(&answer);
            if (!opt) throw ProxyError("cs correctness needs an option answer");
            const auto* ext = std::get_if<ExternalScored>(&task.ground_truth);
            if (ext && ext->correct_option) return opt->index == *ext->correct_option;
            if (!ctx.scorer) throw ScorerUnavailable("no external scorer configured");
            const auto question = render_question(task);
            int best = 0;
            double best_score = -1.0;
            for (int i = 0; i < static_cast<int>(task.options.size()); ++i) {
                const double s = ctx.scorer->score(question, task.options[i]);
                if (s > best_score) {
                    best_score = s;
                    best = i;
                }
            }
            return opt->index == best;
        }
    }
    return false;
}

}  // namespace wow
