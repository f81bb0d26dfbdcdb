#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "witforge/scene.hpp"

namespace witforge::agents {

using json = nlohmann::json;

enum class AgentRole { seed_generator, verifier, mutator, scene_generator, metric_generator };

const char* to_string(AgentRole role);
std::optional<AgentRole> role_from_string(const std::string& s);

enum class Speaker { system, user, assistant };

const char* to_string(Speaker s);

struct Message {
    Speaker speaker = Speaker::system;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct AgentRequest {
    AgentRole role = AgentRole::seed_generator;
    std::vector<Message> messages;  // first message is always the system prompt
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;  // honored by the mock backend only
};

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct AgentReply {
    std::string raw_text;
    std::optional<json> extracted_json;
    std::optional<TokenUsage> token_usage;
    std::chrono::milliseconds latency{0};
    int retry_count = 0;
};

class TemplateError : public std::runtime_error {
public:
    explicit TemplateError(const std::string& what) : std::runtime_error(what) {}
};

class PayloadError : public std::runtime_error {
public:
    explicit PayloadError(const std::string& what) : std::runtime_error(what) {}
};

class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

class AuthError : public std::runtime_error {
public:
    explicit AuthError(const std::string& what) : std::runtime_error(what) {}
};

class OversizeError : public std::runtime_error {
public:
    explicit OversizeError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::size_t kDefaultTokenBudget = 16000;

/// Rough chat-token estimate (4 bytes per token) used for the budget gate.
std::size_t estimate_tokens(const AgentRequest& req);

class AgentBackend {
public:
    virtual ~AgentBackend() = default;

    virtual const char* name() const = 0;
    virtual std::size_t token_budget() const { return kDefaultTokenBudget; }

    std::uint64_t invocations() const { return invocations_.load(); }

    friend AgentReply invoke(AgentBackend& backend, const AgentRequest& req);

protected:
    virtual AgentReply invoke_impl(const AgentRequest& req) = 0;

private:
    std::atomic<std::uint64_t> invocations_{0};
};

/// Shared entry point: checks the request shape and token budget, then
/// dispatches. Throws OversizeError before any transport work.
AgentReply invoke(AgentBackend& backend, const AgentRequest& req);

/// First parseable JSON value from a fenced block, else the whole message,
/// else the first balanced JSON region. Never throws on garbage.
std::optional<json> extract_json(const std::string& raw_text);

/// Body of the first ``` fence carrying the given tag (e.g. "metric").
std::optional<std::string> extract_fenced_block(const std::string& raw_text,
                                                const std::string& tag);

struct PromptConfig {
    scene::WorkspaceSpec workspace = scene::WorkspaceSpec::defaults();
    double generation_temperature = 0.8;    // seed generator, mutator, scene generator
    double verification_temperature = 0.0;  // verifier, metric generator
};

/// Renders the role's system template with config values substituted and
/// the payload as the user message. Substitution is total; an unresolved
/// placeholder is a TemplateError, a payload violating the role contract a
/// PayloadError.
AgentRequest build_prompt(AgentRole role, const json& payload, const PromptConfig& config = {});

/// Raw system template for a role (placeholders unsubstituted).
const std::string& system_template(AgentRole role);

}  // namespace witforge::agents
