#include "wow/gateway.hpp"

#include "wow/hash.hpp"
#include "wow/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace wow {

std::chrono::milliseconds RetryPolicy::delay_for(int attempt, std::uint64_t request_key) const {
    const double raw = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt - 1);
    const double capped = std::min(raw, static_cast<double>(max_delay.count()));
    Rng rng(derive_seed(jitter_seed, "retry", request_key * 16 + static_cast<std::uint64_t>(attempt)));
    const double factor = 0.5 + 0.5 * rng.uniform01();
    return std::chrono::milliseconds(static_cast<long long>(capped * factor));
}

void run_bounded(std::size_t count, int parallelism, const std::function<void(std::size_t)>& job) {
    if (count == 0) return;
    const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, parallelism)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const auto i = next.fetch_add(1);
            if (i >= count) return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);
}

Gateway::Gateway(Transport& transport, int parallelism, RetryPolicy retry)
    : transport_(transport), parallelism_(std::max(1, parallelism)), retry_(std::move(retry)) {
    if (!retry_.sleep) retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (retry_.max_attempts < 1) retry_.max_attempts = 1;
}

ChatResponse Gateway::call(const ChatRequest& request, std::uint64_t request_key) const {
    for (int attempt = 1;; ++attempt) {
        try {
            return transport_.complete(request);
        } catch (const TransportError& e) {
            if (!e.retryable() || attempt >= retry_.max_attempts) throw;
            retry_.sleep(retry_.delay_for(attempt, request_key));
        }
    }
}

void Gateway::dispatch(const std::vector<ChatRequest>& requests,
                       const std::function<void(std::size_t, const ChatResponse*, std::exception_ptr)>& on_complete)
    const {
    run_bounded(requests.size(), parallelism_, [&](std::size_t i) {
        ChatResponse response;
        std::exception_ptr error;
        try {
            response = call(requests[i], fnv1a64(requests[i].prompt()) + requests[i].slot);
        } catch (...) {
            error = std::current_exception();
        }
        on_complete(i, error ? nullptr : &response, error);
    });
}

void SamplingConfig::validate() const {
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (samples_per_task < 2) throw ConfigError("preference work needs at least 2 samples per task");
    if (n_per_call < 1) throw ConfigError("n_per_call must be >= 1");
}

// --- records ------------------------------------------------------------------

Json to_json(const GenerationRecord& r) {
    Json j;
    j["task_id"] = r.task_id;
    j["sample_index"] = r.sample_index;
    j["generator"] = r.generator;
    j["raw_text"] = r.raw_text;
    j["extracted"] = r.extracted ? to_json(*r.extracted) : Json(nullptr);
    j["token_logprobs"] = r.token_logprobs ? Json(*r.token_logprobs) : Json(nullptr);
    if (!r.option_order.empty()) j["option_order"] = r.option_order;
    if (r.call_failed) j["call_failed"] = true;
    return j;
}

GenerationRecord generation_record_from_json(const Json& j) {
    try {
        GenerationRecord r;
        r.task_id = j.at("task_id").get<std::string>();
        r.sample_index = j.at("sample_index").get<int>();
        r.generator = j.at("generator").get<std::string>();
        r.raw_text = j.at("raw_text").get<std::string>();
        if (j.contains("extracted") && !j.at("extracted").is_null())
            r.extracted = extracted_answer_from_json(j.at("extracted"));
        if (j.contains("token_logprobs") && !j.at("token_logprobs").is_null())
            r.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
        if (j.contains("option_order")) r.option_order = j.at("option_order").get<std::vector<int>>();
        r.call_failed = j.value("call_failed", false);
        return r;
    } catch (const Json::exception& e) {
        throw SchemaError(std::string("bad generation record: ") + e.what());
    }
}

std::vector<GenerationRecord> read_records(const std::filesystem::path& path) {
    std::vector<GenerationRecord> out;
    std::size_t line = 0;
    for (const auto& j : read_jsonl(path)) {
        ++line;
        try {
            out.push_back(generation_record_from_json(j));
        } catch (const SchemaError& e) {
            throw IngestError(line, e.what());
        }
    }
    return out;
}

void write_records(const std::filesystem::path& path, const std::vector<GenerationRecord>& records) {
    std::vector<Json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(path, rows);
}

// --- sampling -----------------------------------------------------------------

namespace {

struct PlannedCall {
    std::size_t task;
    int first_sample;
    int count;
    std::vector<int> option_order;
    AnswerContext context;
};

bool is_auth_failure(const TransportError& e) { return e.status() == 401 || e.status() == 403; }

std::vector<GenerationRecord> sample_many(const std::vector<TaskInstance>& tasks, const SamplingConfig& config,
                                          const Gateway& gateway, const std::string& generator,
                                          Diagnostics& diagnostics) {
    config.validate();
    const int m = config.samples_per_task;
    std::vector<PlannedCall> plan;
    std::vector<ChatRequest> requests;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        for (int first = 0; first < m; first += config.n_per_call) {
            PlannedCall call{t, first, std::min(config.n_per_call, m - first), {}, answer_context(task)};
            std::string prompt;
            if (task.is_multiple_choice()) {
                const auto shuffled = shuffle_options(
                    task, derive_seed(config.seed, task.id + "/" + generator, static_cast<std::uint64_t>(first)) | 1);
                prompt = render_question(shuffled.task);
                call.option_order = shuffled.order;
            } else {
                prompt = render_question(task);
            }
            ChatRequest req;
            req.model = config.model_name;
            req.messages = {{"user", std::move(prompt)}};
            req.temperature = config.temperature;
            req.max_tokens = config.max_tokens;
            req.n = call.count;
            req.logprobs = config.want_logprobs;
            req.slot = static_cast<std::uint64_t>(first);
            requests.push_back(std::move(req));
            plan.push_back(std::move(call));
        }
    }

    std::vector<GenerationRecord> out;
    out.reserve(tasks.size() * static_cast<std::size_t>(m));
    std::mutex out_mutex;
    std::exception_ptr fatal;

    gateway.dispatch(requests, [&](std::size_t i, const ChatResponse* response, std::exception_ptr error) {
        const auto& call = plan[i];
        const auto& task = tasks[call.task];
        std::vector<GenerationRecord> produced;
        for (int k = 0; k < call.count; ++k) {
            GenerationRecord r;
            r.task_id = task.id;
            r.sample_index = call.first_sample + k;
            r.generator = generator;
            r.option_order = call.option_order;
            produced.push_back(std::move(r));
        }
        if (error) {
            try {
                std::rethrow_exception(error);
            } catch (const TransportError& e) {
                if (!e.retryable() || is_auth_failure(e)) {
                    std::lock_guard lock(out_mutex);
                    if (!fatal) fatal = std::make_exception_ptr(GatewayError(e.what()));
                    return;
                }
                diagnostics.warn("SlotFailed", task.id + ": " + e.what());
            } catch (...) {
                std::lock_guard lock(out_mutex);
                if (!fatal) fatal = std::current_exception();
                return;
            }
            for (auto& r : produced) r.call_failed = true;
            diagnostics.count("sample.failed_slots", call.count);
        } else {
            for (int k = 0; k < call.count; ++k) {
                auto& r = produced[k];
                if (k >= static_cast<int>(response->choices.size())) {
                    r.call_failed = true;
                    diagnostics.count("sample.failed_slots");
                    continue;
                }
                const auto& choice = response->choices[k];
                r.raw_text = choice.text;
                r.extracted = extract_answer(call.context, choice.text);
                if (r.extracted && !call.option_order.empty()) {
                    auto& opt = std::get<OptionChoice>(*r.extracted);
                    opt.index = call.option_order[opt.index];
                }
                if (config.want_logprobs) {
                    if (choice.token_logprobs) {
                        auto lps = *choice.token_logprobs;
                        for (auto& lp : lps) lp = std::min(lp, 0.0);
                        r.token_logprobs = std::move(lps);
                    } else {
                        diagnostics.warn("CapabilityWarning",
                                         "endpoint for generator '" + generator + "' returned no logprobs");
                    }
                }
            }
        }
        for (const auto& r : produced)
            if (!r.extracted) diagnostics.count("sample.unparseable");
        diagnostics.count("sample.records", call.count);
        std::lock_guard lock(out_mutex);
        for (auto& r : produced) out.push_back(std::move(r));
    });
    if (fatal) std::rethrow_exception(fatal);

    std::sort(out.begin(), out.end(), [](const GenerationRecord& a, const GenerationRecord& b) {
        return std::tie(a.task_id, a.generator, a.sample_index) < std::tie(b.task_id, b.generator, b.sample_index);
    });
    return out;
}

}  // namespace

std::vector<GenerationRecord> sample_answers(const TaskInstance& task, const SamplingConfig& config,
                                             const Gateway& gateway, const std::string& generator,
                                             Diagnostics& diagnostics) {
    return sample_many({task}, config, gateway, generator, diagnostics);
}

std::vector<GenerationRecord> sample_corpus(const std::vector<TaskInstance>& tasks, const SamplingConfig& config,
                                            const Gateway& gateway, const std::string& generator,
                                            Diagnostics& diagnostics) {
    return sample_many(tasks, config, gateway, generator, diagnostics);
}

ChatRequest make_judge_request(const std::string& prompt, const JudgeConfig& config) {
    ChatRequest req;
    req.model = config.model_name;
    req.messages = {{"user", prompt}};
    req.temperature = config.temperature;
    req.max_tokens = config.max_tokens;
    req.n = 1;
    req.logprobs = false;
    req.slot = 0;
    return req;
}

std::string judge(const std::string& prompt, const JudgeConfig& config, const Gateway& gateway,
                  std::uint64_t request_key) {
    try {
        const auto response = gateway.call(make_judge_request(prompt, config), request_key);
        if (response.choices.empty()) throw GatewayError("judge returned no choices");
        return response.choices.front().text;
    } catch (const TransportError& e) {
        throw GatewayError(e.what());
    }
}

std::string prompt_hash(std::string_view prompt) { return sha256_hex(prompt); }

}  // namespace wow
