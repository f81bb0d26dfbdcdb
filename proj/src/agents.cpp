#include "witforge/agents.hpp"

namespace witforge::agents {

const char* to_string(AgentRole role) {
    switch (role) {
        case AgentRole::seed_generator: return "seed_generator";
        case AgentRole::verifier: return "verifier";
        case AgentRole::mutator: return "mutator";
        case AgentRole::scene_generator: return "scene_generator";
        case AgentRole::metric_generator: return "metric_generator";
    }
    return "seed_generator";
}

std::optional<AgentRole> role_from_string(const std::string& s) {
    if (s == "seed_generator") return AgentRole::seed_generator;
    if (s == "verifier") return AgentRole::verifier;
    if (s == "mutator") return AgentRole::mutator;
    if (s == "scene_generator") return AgentRole::scene_generator;
    if (s == "metric_generator") return AgentRole::metric_generator;
    return std::nullopt;
}

const char* to_string(Speaker s) {
    switch (s) {
        case Speaker::system: return "system";
        case Speaker::user: return "user";
        case Speaker::assistant: return "assistant";
    }
    return "system";
}

std::size_t estimate_tokens(const AgentRequest& req) {
    std::size_t bytes = 0;
    for (const auto& m : req.messages) bytes += m.content.size() + 8;
    return bytes / 4 + 1;
}

AgentReply invoke(AgentBackend& backend, const AgentRequest& req) {
    if (req.messages.empty() || req.messages.front().speaker != Speaker::system ||
        req.messages.front().content.empty()) {
        throw PayloadError("request must start with a non-empty system message");
    }
    if (req.temperature < 0) throw PayloadError("temperature must be >= 0");
    const std::size_t estimate = estimate_tokens(req);
    if (estimate > backend.token_budget()) {
        // oversize payloads are rejected outright, never truncated
        throw OversizeError("request of ~" + std::to_string(estimate) +
                            " tokens exceeds the budget of " +
                            std::to_string(backend.token_budget()));
    }
    backend.invocations_.fetch_add(1);
    return backend.invoke_impl(req);
}

namespace {

// Returns the first complete balanced JSON value starting at `start`,
// respecting strings and escapes; npos length when unbalanced.
std::size_t balanced_span(const std::string& text, std::size_t start) {
    const char open = text[start];
    const char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            --depth;
            if (depth == 0) return i - start + 1;
        }
    }
    return std::string::npos;
}

std::optional<json> try_parse(const std::string& text) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
}

}  // namespace

std::optional<json> extract_json(const std::string& raw_text) {
    // fenced blocks first, in order of appearance
    std::size_t at = 0;
    while ((at = raw_text.find("```", at)) != std::string::npos) {
        std::size_t body = raw_text.find('\n', at + 3);
        if (body == std::string::npos) break;
        ++body;
        const std::size_t end = raw_text.find("```", body);
        if (end == std::string::npos) break;
        if (auto parsed = try_parse(raw_text.substr(body, end - body))) return parsed;
        at = end + 3;
    }

    if (auto parsed = try_parse(raw_text)) return parsed;

    // first balanced {...} or [...] region that parses
    for (std::size_t i = 0; i < raw_text.size(); ++i) {
        if (raw_text[i] != '{' && raw_text[i] != '[') continue;
        const std::size_t len = balanced_span(raw_text, i);
        if (len == std::string::npos) continue;
        if (auto parsed = try_parse(raw_text.substr(i, len))) return parsed;
    }
    return std::nullopt;
}

std::optional<std::string> extract_fenced_block(const std::string& raw_text,
                                                const std::string& tag) {
    const std::string opener = "```" + tag;
    std::size_t at = 0;
    while ((at = raw_text.find(opener, at)) != std::string::npos) {
        std::size_t body = raw_text.find('\n', at);
        if (body == std::string::npos) return std::nullopt;
        ++body;
        const std::size_t end = raw_text.find("```", body);
        if (end == std::string::npos) return std::nullopt;
        return raw_text.substr(body, end - body);
    }
    return std::nullopt;
}

}  // namespace witforge::agents
