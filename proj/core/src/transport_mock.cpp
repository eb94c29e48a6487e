#include "wow/gateway.hpp"
#include "wow/simulated_llm.hpp"

#include <map>
#include <mutex>

namespace wow {

struct MockTransport::Impl {
    struct Entry {
        std::vector<ChatChoice> completions;
        bool slot_pinned = false;
        int fail_first = 0;
        int fail_status = 429;
    };

    std::map<std::pair<std::string, long long>, Entry> entries;  // slot -1 = any slot
    std::optional<SimulatedLlm> fallback;
    bool logprobs_supported = true;
    mutable std::mutex mutex;
    std::size_t calls = 0;
};

namespace {

ChatChoice choice_from_json(const Json& j) {
    ChatChoice c;
    if (j.is_string()) {
        c.text = j.get<std::string>();
        return c;
    }
    c.text = j.at("text").get<std::string>();
    if (j.contains("logprobs") && !j.at("logprobs").is_null()) c.token_logprobs = j.at("logprobs").get<std::vector<double>>();
    return c;
}

}  // namespace

MockTransport::MockTransport(const std::vector<Json>& script) : impl_(std::make_shared<Impl>()) {
    std::size_t line = 0;
    for (const auto& j : script) {
        ++line;
        try {
            if (j.contains("fallback")) {
                if (j.at("fallback") != "simulated")
                    throw SchemaError("unsupported fallback " + j.at("fallback").dump());
                impl_->fallback.emplace(simulation_profile_from_json(j.value("profile", Json::object())));
                continue;
            }
            if (j.contains("capabilities")) {
                impl_->logprobs_supported = j.at("capabilities").value("logprobs", true);
                continue;
            }
            Impl::Entry e;
            for (const auto& c : j.at("completions")) e.completions.push_back(choice_from_json(c));
            if (e.completions.empty()) throw SchemaError("entry needs at least one completion");
            long long slot = -1;
            if (j.contains("slot")) {
                slot = j.at("slot").get<long long>();
                e.slot_pinned = true;
            }
            e.fail_first = j.value("fail_first", 0);
            e.fail_status = j.value("fail_status", 429);
            impl_->entries[{j.at("prompt_hash").get<std::string>(), slot}] = std::move(e);
        } catch (const Json::exception& ex) {
            throw IngestError(line, std::string("bad mock script entry: ") + ex.what());
        } catch (const SchemaError& ex) {
            throw IngestError(line, ex.what());
        }
    }
}

std::unique_ptr<MockTransport> MockTransport::from_file(const std::filesystem::path& path) {
    return std::make_unique<MockTransport>(read_jsonl(path));
}

std::size_t MockTransport::calls() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->calls;
}

ChatResponse MockTransport::complete(const ChatRequest& request) {
    const auto hash = prompt_hash(request.prompt());
    ChatResponse out;
    {
        std::lock_guard lock(impl_->mutex);
        ++impl_->calls;
        auto it = impl_->entries.find({hash, static_cast<long long>(request.slot)});
        if (it == impl_->entries.end()) it = impl_->entries.find({hash, -1});
        if (it != impl_->entries.end()) {
            auto& e = it->second;
            if (e.fail_first > 0) {
                --e.fail_first;
                const bool retryable = e.fail_status == 429 || e.fail_status >= 500;
                throw TransportError(e.fail_status, retryable, "scripted failure (HTTP " + std::to_string(e.fail_status) + ")");
            }
            for (int k = 0; k < std::max(1, request.n); ++k) {
                const auto idx = e.slot_pinned ? static_cast<std::size_t>(k)
                                               : static_cast<std::size_t>(request.slot) + static_cast<std::size_t>(k);
                out.choices.push_back(e.completions[idx % e.completions.size()]);
            }
        } else if (!impl_->fallback) {
            throw TransportError(404, false, "no scripted completion for prompt hash " + hash);
        }
    }
    if (out.choices.empty()) out = impl_->fallback->complete(request);
    for (auto& c : out.choices)
        if (!request.logprobs || !impl_->logprobs_supported) c.token_logprobs.reset();
    return out;
}

}  // namespace wow
