#pragma once

#include "wow/corpus.hpp"
#include "wow/diagnostics.hpp"
#include "wow/errors.hpp"
#include "wow/parsing.hpp"

#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wow {

struct ChatMessage {
    std::string role;
    std::string content;
};

/// One chat-completions call. `slot` identifies the request within a run
/// (the sample index for generation, 0 for judging) and never goes on the
/// wire; scripted transports use it to pick a deterministic completion.
struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    int max_tokens = 1024;
    int n = 1;
    bool logprobs = false;
    std::uint64_t slot = 0;

    const std::string& prompt() const { return messages.back().content; }
};

struct ChatChoice {
    std::string text;
    /// Natural-log probability of each generated token, when reported.
    std::optional<std::vector<double>> token_logprobs;
};

struct ChatResponse {
    std::vector<ChatChoice> choices;
};

/// Failure reported by a transport. Retryable failures (HTTP 429, 5xx,
/// connection errors) are retried by the gateway; others surface at once.
class TransportError : public Error {
public:
    TransportError(int status, bool retryable, const std::string& message)
        : Error("TransportError", message), status_(status), retryable_(retryable) {}

    int status() const noexcept { return status_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int status_;
    bool retryable_;
};

/// Synchronous chat-completions endpoint. Implementations must be safe to
/// call from several threads at once.
class Transport {
public:
    virtual ~Transport() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Exponential backoff with seeded jitter: attempt k waits
/// min(max_delay, base_delay * multiplier^(k-1)) scaled by a factor in [0.5, 1).
struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{30000};
    std::uint64_t jitter_seed = 42;
    std::function<void(std::chrono::milliseconds)> sleep;

    std::chrono::milliseconds delay_for(int attempt, std::uint64_t request_key) const;
};

/// Runs `count` jobs with at most `parallelism` executing at once. Jobs
/// complete in no particular order; the first exception is rethrown after
/// every started job has finished.
void run_bounded(std::size_t count, int parallelism, const std::function<void(std::size_t)>& job);

class Gateway {
public:
    Gateway(Transport& transport, int parallelism, RetryPolicy retry = {});

    /// One call with the retry policy applied. Throws TransportError when a
    /// non-retryable failure occurs or the attempt budget is exhausted.
    ChatResponse call(const ChatRequest& request, std::uint64_t request_key) const;

    /// Issues every request concurrently under the parallelism bound and
    /// hands each outcome to `on_complete` as it arrives (any order, any
    /// thread). Exactly one of response / error is set per call.
    void dispatch(const std::vector<ChatRequest>& requests,
                  const std::function<void(std::size_t index, const ChatResponse* response,
                                           std::exception_ptr error)>& on_complete) const;

    int parallelism() const { return parallelism_; }
    const RetryPolicy& retry() const { return retry_; }

private:
    Transport& transport_;
    int parallelism_;
    RetryPolicy retry_;
};

struct SamplingConfig {
    double temperature = 1.0;
    int max_tokens = 1024;
    int samples_per_task = 10;
    bool want_logprobs = false;
    std::string model_name;
    /// Completions requested per call; 1 means independent calls.
    int n_per_call = 1;
    std::uint64_t seed = 42;

    void validate() const;
};

struct JudgeConfig {
    std::string evaluator_name = "judge";
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct GenerationRecord {
    std::string task_id;
    int sample_index = 0;
    std::string generator;
    std::string raw_text;
    /// nullopt: Unparseable (including slots whose calls all failed).
    std::optional<ExtractedAnswer> extracted;
    std::optional<std::vector<double>> token_logprobs;
    /// Multiple-choice only: order[shown position] = original option index.
    std::vector<int> option_order;
    bool call_failed = false;

    bool operator==(const GenerationRecord&) const = default;
};

Json to_json(const GenerationRecord& record);
GenerationRecord generation_record_from_json(const Json& j);
std::vector<GenerationRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<GenerationRecord>& records);

/// Samples `samples_per_task` answers for one task.
std::vector<GenerationRecord> sample_answers(const TaskInstance& task, const SamplingConfig& config,
                                             const Gateway& gateway, const std::string& generator,
                                             Diagnostics& diagnostics);

/// Samples every task concurrently. Output is sorted by
/// (task_id, generator, sample_index), never by arrival.
std::vector<GenerationRecord> sample_corpus(const std::vector<TaskInstance>& tasks, const SamplingConfig& config,
                                            const Gateway& gateway, const std::string& generator,
                                            Diagnostics& diagnostics);

ChatRequest make_judge_request(const std::string& prompt, const JudgeConfig& config);

/// Single judge completion. Throws GatewayError once retries are exhausted.
std::string judge(const std::string& prompt, const JudgeConfig& config, const Gateway& gateway,
                  std::uint64_t request_key = 0);

// --- transports ---------------------------------------------------------------

struct HttpTransportConfig {
    /// e.g. https://api.openai.com/v1 ; the route below is appended.
    std::string base_url = "https://api.openai.com/v1";
    std::string route = "/chat/completions";
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
};

/// OpenAI-compatible chat completions over HTTP(S).
std::unique_ptr<Transport> make_http_transport(const HttpTransportConfig& config);

Json chat_request_body(const ChatRequest& request);
ChatResponse parse_chat_response(const Json& body);

/// Scripted transport: line-delimited entries keyed by the SHA-256 of the
/// prompt (see docs/formats.md). A `fallback` entry routes unmatched prompts
/// to the simulated model.
class MockTransport : public Transport {
public:
    explicit MockTransport(const std::vector<Json>& script);
    static std::unique_ptr<MockTransport> from_file(const std::filesystem::path& path);

    ChatResponse complete(const ChatRequest& request) override;

    std::size_t calls() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

std::string prompt_hash(std::string_view prompt);

}  // namespace wow
