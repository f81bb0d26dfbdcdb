#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "witforge/agents.hpp"
#include "witforge/scene.hpp"

namespace witforge::agents {

/// Deterministic offline backend: a pure function of (role, payload, seed).
/// Seed tasks come from three parametric templates; the verifier applies a
/// fixed keyword rule table plus the local completeness predicate; the
/// mutator applies syntactic transforms whose flaw mix is driven by the
/// request seed; the scene generator places objects on a grid inside the
/// reachable region; the metric generator emits canonical metric programs.
class MockBackend : public AgentBackend {
public:
    struct Options {
        scene::WorkspaceSpec workspace = scene::WorkspaceSpec::defaults();
        // Mutation flaw mix, rolled as seed % 20:
        //   [0, stubborn)                      unfixable infeasible solution
        //   [stubborn, stubborn+contract)      deletes/renames a protected object
        //   [.., ..+transient)                 completeness flaw fixed on feedback
        //   rest                               clean candidate
        int stubborn_rolls = 6;
        int contract_rolls = 2;
        int transient_rolls = 4;
        bool adversarial = false;  // every mutation violates the additive contract
    };

    MockBackend() = default;
    explicit MockBackend(Options options) : options_(std::move(options)) {}

    const char* name() const override { return "mock"; }

protected:
    AgentReply invoke_impl(const AgentRequest& req) override;

private:
    Options options_;
};

struct HttpOptions {
    std::string endpoint;  // e.g. http://127.0.0.1:8080/v1/chat/completions
    std::string model;
    std::string api_key;
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{200};
    std::size_t token_budget = kDefaultTokenBudget;
    int in_flight_cap = 4;

    /// Reads WITFORGE_LLM_ENDPOINT, WITFORGE_LLM_MODEL, WITFORGE_LLM_KEY.
    static HttpOptions from_env();
};

/// Generic chat-completion transport: POST {model, messages, temperature}
/// with bounded retries (exponential backoff) on transport errors and
/// rate-limit responses.
class HttpBackend : public AgentBackend {
public:
    explicit HttpBackend(HttpOptions options);
    ~HttpBackend() override;

    const char* name() const override { return "http"; }
    std::size_t token_budget() const override { return options_.token_budget; }

protected:
    AgentReply invoke_impl(const AgentRequest& req) override;

private:
    struct Impl;
    HttpOptions options_;
    std::unique_ptr<Impl> impl_;
};

/// Stable key for matching a request against a recorded transcript.
std::uint64_t request_key(const AgentRequest& req);

json request_to_json(const AgentRequest& req);
json reply_to_json(const AgentReply& reply);
AgentReply reply_from_json(const json& doc);

/// Wraps another backend and appends one JSON-lines record per invoke,
/// suitable for later replay.
class RecordingBackend : public AgentBackend {
public:
    RecordingBackend(AgentBackend& inner, const std::string& path);

    const char* name() const override { return inner_.name(); }
    std::size_t token_budget() const override { return inner_.token_budget(); }

protected:
    AgentReply invoke_impl(const AgentRequest& req) override;

private:
    AgentBackend& inner_;
    std::ofstream out_;
    std::mutex mutex_;
};

/// Serves recorded replies keyed by request content; replies to identical
/// requests are consumed in recorded order.
class ReplayBackend : public AgentBackend {
public:
    explicit ReplayBackend(const std::string& transcript_path);

    const char* name() const override { return "replay"; }

protected:
    AgentReply invoke_impl(const AgentRequest& req) override;

private:
    std::map<std::uint64_t, std::vector<AgentReply>> replies_;
    std::map<std::uint64_t, std::size_t> cursor_;
    std::mutex mutex_;
};

}  // namespace witforge::agents
