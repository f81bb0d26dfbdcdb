#include <cstdlib>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "witforge/backends.hpp"

namespace witforge::agents {

HttpOptions HttpOptions::from_env() {
    HttpOptions options;
    if (const char* e = std::getenv("WITFORGE_LLM_ENDPOINT")) options.endpoint = e;
    if (const char* m = std::getenv("WITFORGE_LLM_MODEL")) options.model = m;
    if (const char* k = std::getenv("WITFORGE_LLM_KEY")) options.api_key = k;
    return options;
}

struct HttpBackend::Impl {
    explicit Impl(int cap) : gate(cap > 0 ? cap : 1) {}
    std::counting_semaphore<64> gate;
    std::string host;
    int port = 80;
    std::string path = "/";
};

namespace {

void split_endpoint(const std::string& endpoint, std::string& host, int& port, std::string& path) {
    std::string rest = endpoint;
    const auto scheme = rest.find("://");
    if (scheme != std::string::npos) rest = rest.substr(scheme + 3);
    const auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    path = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = authority.find(':');
    if (colon == std::string::npos) {
        host = authority;
        port = 80;
    } else {
        host = authority.substr(0, colon);
        port = std::stoi(authority.substr(colon + 1));
    }
}

const char* wire_role(Speaker s) {
    switch (s) {
        case Speaker::system: return "system";
        case Speaker::user: return "user";
        case Speaker::assistant: return "assistant";
    }
    return "system";
}

}  // namespace

HttpBackend::HttpBackend(HttpOptions options)
    : options_(std::move(options)), impl_(std::make_unique<Impl>(options_.in_flight_cap)) {
    if (options_.endpoint.empty()) {
        throw TransportError("http backend needs an endpoint (WITFORGE_LLM_ENDPOINT)");
    }
    split_endpoint(options_.endpoint, impl_->host, impl_->port, impl_->path);
}

HttpBackend::~HttpBackend() = default;

AgentReply HttpBackend::invoke_impl(const AgentRequest& req) {
    json body = json::object();
    body["model"] = options_.model;
    body["temperature"] = req.temperature;
    if (req.seed) body["seed"] = *req.seed;
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", wire_role(m.speaker)}, {"content", m.content}});
    }
    body["messages"] = std::move(messages);
    const std::string payload = body.dump();

    impl_->gate.acquire();
    struct Release {
        std::counting_semaphore<64>& gate;
        ~Release() { gate.release(); }
    } release{impl_->gate};

    const auto started = std::chrono::steady_clock::now();
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
        }
        httplib::Client client(impl_->host, impl_->port);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (!options_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + options_.api_key);
        }
        auto res = client.Post(impl_->path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw AuthError("endpoint rejected credentials (HTTP " +
                            std::to_string(res->status) + ")");
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw TransportError("unexpected HTTP " + std::to_string(res->status) + ": " +
                                 res->body);
        }

        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty()) {
            throw TransportError("malformed chat completion response");
        }
        AgentReply reply;
        reply.raw_text = parsed["choices"][0]["message"]["content"].get<std::string>();
        reply.extracted_json = extract_json(reply.raw_text);
        if (parsed.contains("usage")) {
            TokenUsage usage;
            usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0);
            usage.completion_tokens = parsed["usage"].value("completion_tokens", 0);
            reply.token_usage = usage;
        }
        reply.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        reply.retry_count = attempt;
        return reply;
    }
    throw TransportError("retries exhausted: " + last_error);
}

}  // namespace witforge::agents
