#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "wow/gateway.hpp"

#include <cstdlib>
#include <regex>

namespace wow {

Json chat_request_body(const ChatRequest& request) {
    Json body;
    body["model"] = request.model;
    Json messages = Json::array();
    for (const auto& m : request.messages) messages.push_back(Json{{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    body["n"] = request.n;
    if (request.logprobs) body["logprobs"] = true;
    return body;
}

ChatResponse parse_chat_response(const Json& body) {
    ChatResponse out;
    if (!body.contains("choices") || !body.at("choices").is_array())
        throw TransportError(0, false, "response has no choices array");
    for (const auto& c : body.at("choices")) {
        ChatChoice choice;
        const auto& content = c.at("message").at("content");
        choice.text = content.is_null() ? "" : content.get<std::string>();
        if (c.contains("logprobs") && c.at("logprobs").is_object() && c.at("logprobs").contains("content") &&
            c.at("logprobs").at("content").is_array()) {
            std::vector<double> lps;
            for (const auto& tok : c.at("logprobs").at("content")) lps.push_back(tok.at("logprob").get<double>());
            choice.token_logprobs = std::move(lps);
        }
        out.choices.push_back(std::move(choice));
    }
    return out;
}

namespace {

class HttpTransport : public Transport {
public:
    explicit HttpTransport(HttpTransportConfig config) : config_(std::move(config)) {
        static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
        std::smatch m;
        if (!std::regex_match(config_.base_url, m, kUrl)) throw ConfigError("bad base_url '" + config_.base_url + "'");
        origin_ = m[1].str();
        path_ = m[2].str();
        while (!path_.empty() && path_.back() == '/') path_.pop_back();
        path_ += config_.route;
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }

    ChatResponse complete(const ChatRequest& request) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        const auto result = client.Post(path_, headers, chat_request_body(request).dump(), "application/json");
        if (!result) throw TransportError(0, true, "transport failure: " + httplib::to_string(result.error()));
        const int status = result->status;
        if (status == 429 || status >= 500)
            throw TransportError(status, true, "HTTP " + std::to_string(status));
        if (status == 401 || status == 403)
            throw TransportError(status, false, "authentication failed (HTTP " + std::to_string(status) + ")");
        if (status != 200)
            throw TransportError(status, false, "HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200));
        Json body;
        try {
            body = Json::parse(result->body);
        } catch (const Json::parse_error&) {
            throw TransportError(status, true, "unparseable response body");
        }
        return parse_chat_response(body);
    }

private:
    HttpTransportConfig config_;
    std::string origin_;
    std::string path_;
    std::string api_key_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const HttpTransportConfig& config) {
    return std::make_unique<HttpTransport>(config);
}

}  // namespace wow
