#include <sstream>

#include "witforge/backends.hpp"

namespace witforge::agents {

namespace {

std::uint64_t fnv1a(const std::string& data, std::uint64_t h = 1469598103934665603ULL) {
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::uint64_t request_key(const AgentRequest& req) {
    std::uint64_t h = fnv1a(to_string(req.role));
    for (const auto& m : req.messages) {
        h = fnv1a(to_string(m.speaker), h);
        h = fnv1a(m.content, h);
    }
    return h;
}

json request_to_json(const AgentRequest& req) {
    json messages = json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"speaker", to_string(m.speaker)}, {"content", m.content}});
    }
    json doc = {{"messages", std::move(messages)}, {"temperature", req.temperature}};
    if (req.seed) doc["seed"] = *req.seed;
    return doc;
}

json reply_to_json(const AgentReply& reply) {
    json doc = {{"raw_text", reply.raw_text},
                {"latency_ms", reply.latency.count()},
                {"retry_count", reply.retry_count}};
    if (reply.token_usage) {
        doc["usage"] = {{"prompt_tokens", reply.token_usage->prompt_tokens},
                        {"completion_tokens", reply.token_usage->completion_tokens}};
    }
    return doc;
}

AgentReply reply_from_json(const json& doc) {
    AgentReply reply;
    reply.raw_text = doc.value("raw_text", "");
    reply.extracted_json = extract_json(reply.raw_text);
    reply.latency = std::chrono::milliseconds(doc.value("latency_ms", 0));
    reply.retry_count = doc.value("retry_count", 0);
    if (doc.contains("usage")) {
        TokenUsage usage;
        usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
        usage.completion_tokens = doc["usage"].value("completion_tokens", 0);
        reply.token_usage = usage;
    }
    return reply;
}

RecordingBackend::RecordingBackend(AgentBackend& inner, const std::string& path)
    : inner_(inner), out_(path, std::ios::app) {
    if (!out_.good()) throw TransportError("cannot open transcript for writing: " + path);
}

AgentReply RecordingBackend::invoke_impl(const AgentRequest& req) {
    AgentReply reply = invoke(inner_, req);
    json record = {{"role", to_string(req.role)},
                   {"request_key", request_key(req)},
                   {"request", request_to_json(req)},
                   {"reply", reply_to_json(reply)}};
    {
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << record.dump() << "\n";
        out_.flush();
    }
    return reply;
}

ReplayBackend::ReplayBackend(const std::string& transcript_path) {
    std::ifstream in(transcript_path);
    if (!in.good()) throw TransportError("cannot read transcript: " + transcript_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.contains("request_key")) {
            throw TransportError("malformed transcript line: " + line.substr(0, 80));
        }
        replies_[record["request_key"].get<std::uint64_t>()].push_back(
            reply_from_json(record["reply"]));
    }
}

AgentReply ReplayBackend::invoke_impl(const AgentRequest& req) {
    const std::uint64_t key = request_key(req);
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = replies_.find(key);
    if (it == replies_.end()) {
        throw TransportError("replay transcript has no reply for a " +
                             std::string(to_string(req.role)) + " request");
    }
    auto& cursor = cursor_[key];
    if (cursor >= it->second.size()) {
        throw TransportError("replay transcript exhausted for a " +
                             std::string(to_string(req.role)) + " request");
    }
    return it->second[cursor++];
}

}  // namespace witforge::agents
