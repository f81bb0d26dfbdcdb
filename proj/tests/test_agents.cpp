#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "testutil.hpp"
#include "witforge/backends.hpp"
#include "witforge/verification.hpp"

using namespace witforge;
using namespace witforge::agents;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json mutator_payload(const json& task, const std::string& type) {
    return {{"task", task}, {"mutation_type", type}};
}

json sample_task_json() {
    schema::TaskSpec t;
    t.task_name = "sample";
    schema::ObjectSpec cube;
    cube.object_name = "cube";
    cube.potential_instances = {"wooden cube"};
    t.object_list = {cube};
    t.initial_scene_setup = "The 'cube' sits on the table.";
    t.task_instruction = "Lift the cube.";
    t.task_success_criteria = "the 'cube' is lifted";
    t.potential_solution = "Grasp the 'cube'.";
    t.task_description = "Trivial.";
    return schema::to_json(t);
}

void check_against_golden(const std::string& name, const std::string& got) {
    const std::string path = wftest::test_data_dir() + "/golden/" + name;
    if (std::getenv("WITFORGE_UPDATE_GOLDEN")) {
        std::ofstream out(path);
        out << got;
        return;
    }
    const std::string want = read_file(path);
    REQUIRE_MESSAGE(!want.empty(), "golden file missing: " << path);
    CHECK_MESSAGE(got == want, "golden mismatch for " << name);
}

}  // namespace

TEST_CASE("system prompts render against frozen golden files") {
    const PromptConfig config;
    const struct {
        AgentRole role;
        const char* file;
        json payload;
    } cases[] = {
        {AgentRole::seed_generator, "prompt_seed_generator.txt", json::object()},
        {AgentRole::verifier, "prompt_verifier.txt", sample_task_json()},
        {AgentRole::mutator, "prompt_mutator.txt", mutator_payload(sample_task_json(), "pivot")},
        {AgentRole::scene_generator, "prompt_scene_generator.txt",
         json{{"task", sample_task_json()}}},
        {AgentRole::metric_generator, "prompt_metric_generator.txt",
         json{{"task", sample_task_json()}}},
    };
    for (const auto& c : cases) {
        const AgentRequest req = build_prompt(c.role, c.payload, config);
        REQUIRE(req.messages.size() == 2);
        CHECK(req.messages[0].speaker == Speaker::system);
        check_against_golden(c.file, req.messages[0].content);
        // substitution is total
        CHECK(req.messages[0].content.find("{{") == std::string::npos);
    }
}

TEST_CASE("rendered prompts differ from templates only at placeholder sites") {
    const std::string rendered =
        build_prompt(AgentRole::verifier, sample_task_json(), PromptConfig{})
            .messages[0]
            .content;
    CHECK(rendered.find("audit input tasks for Completeness, Simulatability, Feasibility") !=
          std::string::npos);
    CHECK(rendered.find("0.79m x 1.38m") != std::string::npos);
    CHECK(rendered.find("\"z_min\": 0.76") != std::string::npos);

    const std::string& raw = system_template(AgentRole::verifier);
    CHECK(raw.find("{{TABLE_DIMS}}") != std::string::npos);
    CHECK(raw.find("0.79m") == std::string::npos);
}

TEST_CASE("mutator prompt names the mutation type") {
    const AgentRequest req =
        build_prompt(AgentRole::mutator, mutator_payload(sample_task_json(), "pivot"));
    CHECK(req.messages[0].content.find("Pivot: Block the current 'potential_solution'") !=
          std::string::npos);
    CHECK(req.messages[1].content.find("\"mutation_type\": \"pivot\"") != std::string::npos);
}

TEST_CASE("payload contracts are enforced") {
    CHECK_THROWS_AS(build_prompt(AgentRole::verifier, json(nullptr)), PayloadError);
    CHECK_THROWS_AS(build_prompt(AgentRole::mutator, json::object()), PayloadError);
    CHECK_THROWS_AS(
        build_prompt(AgentRole::mutator, mutator_payload(sample_task_json(), "weird")),
        PayloadError);
    CHECK_THROWS_AS(build_prompt(AgentRole::scene_generator, json{{"task", 42}}), PayloadError);
    CHECK_THROWS_AS(build_prompt(AgentRole::seed_generator, json{{"num_tasks", -1}}),
                    PayloadError);
}

TEST_CASE("temperatures default per role") {
    CHECK(build_prompt(AgentRole::seed_generator, json::object()).temperature == 0.8);
    CHECK(build_prompt(AgentRole::mutator, mutator_payload(sample_task_json(), "trap"))
              .temperature == 0.8);
    CHECK(build_prompt(AgentRole::verifier, sample_task_json()).temperature == 0.0);
    CHECK(build_prompt(AgentRole::metric_generator, json{{"task", sample_task_json()}})
              .temperature == 0.0);
}

TEST_CASE("extract_json handles fences, absence, and garbage") {
    CHECK(extract_json("```json\n{\"a\":1}\n```") == json{{"a", 1}});
    CHECK(!extract_json("no json here").has_value());
    CHECK(extract_json("prefix text\n```json\n[1,2]\n```\nsuffix") == json::array({1, 2}));
    CHECK(extract_json("{\"whole\": true}") == json{{"whole", true}});
    CHECK(extract_json("text {\"embedded\": [1, {\"deep\": \"}\"}]} trailing") ==
          json{{"embedded", json::array({1, json{{"deep", "}"}}})}});
    CHECK(!extract_json("broken ```json\n{\"a\":\n``` oops").has_value());
}

TEST_CASE("the first of two fenced blocks wins") {
    const std::string reply =
        "First:\n```json\n{\"first\": 1}\n```\nSecond:\n```json\n{\"second\": 2}\n```";
    CHECK(extract_json(reply) == json{{"first", 1}});
}

TEST_CASE("extract_json over a synthetic reply corpus") {
    const struct {
        std::string text;
        json want;  // null marks expected absence
    } corpus[] = {
        {"```json\n42\n```", json(42)},
        {"```json\n\"quoted\"\n```", json("quoted")},
        {"Sure! Here you go:\n```json\n{\"k\": [true, null]}\n```\nLet me know!",
         json{{"k", json::array({true, nullptr})}}},
        {"```JSON?\nnot a tag we fence\n```{\"x\":3}", json{{"x", 3}}},
        {"```\n{\"untagged\": \"fence\"}\n```", json{{"untagged", "fence"}}},
        {"   [1, 2, 3]   ", json::array({1, 2, 3})},
        {"text [not json] more {also: not}", json()},
        {"nested braces {\"a\": {\"b\": {\"c\": 1}}}", json{{"a", {{"b", {{"c", 1}}}}}}},
        {"escaped \"{\\\"a\\\": 1}\" quote then {\"b\": 2}", json{{"b", 2}}},
        {"", json()},
        {"{\"trunc\": ", json()},
        {"[1, 2, [3, 4], {\"five\": 5}]", json::array({1, 2, json::array({3, 4}), {{"five", 5}}})},
        {"The answer is 42.", json()},
        {"half fence ``` but no close", json()},
        {"```json\n{\"bad\": }\n```\nthen fine: {\"ok\": 1}", json{{"ok", 1}}},
        {"```metric\nmetric { success: true; }\n```", json()},
        {"multi\n```json\n\n[\n 1,\n 2\n]\n\n```\nline", json::array({1, 2})},
        {"prose { not json } then ```json\n{\"late\": true}\n```", json{{"late", true}}},
        {"[]", json::array()},
        {"{}", json::object()},
    };
    for (const auto& c : corpus) {
        CAPTURE(c.text);
        const auto got = extract_json(c.text);
        if (c.want.is_null()) {
            CHECK(!got.has_value());
        } else {
            REQUIRE(got.has_value());
            CHECK(*got == c.want);
        }
    }
}

TEST_CASE("fenced canonical JSON extracts back to itself") {
    Rng rng(6021);
    for (int i = 0; i < 50; ++i) {
        json x = {{"n", rng.next_in(-5, 5)},
                  {"s", std::to_string(rng.next_u64())},
                  {"v", json::array({rng.next_double(), true, nullptr})}};
        const std::string fenced = "```json\n" + x.dump(2) + "\n```";
        CHECK(extract_json(fenced) == x);
    }
}

TEST_CASE("extract_fenced_block pulls tagged fences") {
    const std::string text = "prose\n```metric\nmetric { success: true; }\n```\nafter";
    const auto block = extract_fenced_block(text, "metric");
    REQUIRE(block.has_value());
    CHECK(*block == "metric { success: true; }\n");
    CHECK(!extract_fenced_block("nothing here", "metric").has_value());
}

TEST_CASE("mock backend is deterministic") {
    MockBackend mock;
    AgentRequest req = build_prompt(AgentRole::seed_generator, json{{"num_tasks", 3}});
    req.seed = 7;
    const AgentReply a = invoke(mock, req);
    const AgentReply b = invoke(mock, req);
    CHECK(a.raw_text == b.raw_text);
    REQUIRE(a.extracted_json.has_value());
    CHECK(a.extracted_json->is_array());
    CHECK(a.extracted_json->size() == 3);
}

TEST_CASE("mock seed tasks parse and validate") {
    MockBackend mock;
    AgentRequest req = build_prompt(AgentRole::seed_generator, json::object());
    req.seed = 1;
    const AgentReply reply = invoke(mock, req);
    REQUIRE(reply.extracted_json.has_value());
    for (const auto& doc : *reply.extracted_json) {
        const schema::TaskSpec t = schema::parse_task_json(doc);
        CHECK(schema::validate_task(t).error_free());
        CHECK(verify::completeness_check(t).complete);
    }
}

TEST_CASE("mock verifier completeness agrees with the local predicate") {
    MockBackend mock;
    json task = sample_task_json();
    task["task_success_criteria"] = "the 'cube' rests beside the 'lemon'";
    AgentRequest req = build_prompt(AgentRole::verifier, task);
    const AgentReply reply = invoke(mock, req);
    REQUIRE(reply.extracted_json.has_value());
    CHECK((*reply.extracted_json)["completeness"]["completeness"] == "no");
    CHECK((*reply.extracted_json)["completeness"]["missing_objects"] ==
          json::array({"lemon"}));

    const schema::TaskSpec t = schema::parse_task_json(task);
    const auto local = verify::completeness_check(t);
    CHECK(!local.complete);
}

TEST_CASE("mock verifier report parses as a VerificationReport") {
    MockBackend mock;
    const AgentReply reply = invoke(mock, build_prompt(AgentRole::verifier, sample_task_json()));
    REQUIRE(reply.extracted_json.has_value());
    const auto report = verify::VerificationReport::from_json(*reply.extracted_json);
    CHECK(report.difficulty.score >= 1);
    CHECK(report.difficulty.score <= 5);
    CHECK(!report.updated_object_list.empty());
}

TEST_CASE("oversize requests are rejected before transport") {
    MockBackend mock;
    AgentRequest req = build_prompt(AgentRole::verifier, sample_task_json());
    req.messages[1].content.assign(kDefaultTokenBudget * 5, 'x');
    CHECK_THROWS_AS(invoke(mock, req), OversizeError);
}

TEST_CASE("requests must start with a system message") {
    MockBackend mock;
    AgentRequest req;
    req.role = AgentRole::verifier;
    req.messages = {{Speaker::user, "hi"}};
    CHECK_THROWS_AS(invoke(mock, req), PayloadError);
}

TEST_CASE("http backend retries 429s and reports the retry count") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int n = ++hits;
        if (n <= 3) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        json message = {{"content", "```json\n{\"ok\":1}\n```"}};
        json body;
        body["choices"] = json::array({json{{"message", message}}});
        body["usage"] = {{"prompt_tokens", 12}, {"completion_tokens", 5}};
        res.set_content(body.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread serve([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpOptions options;
    options.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    options.model = "test-model";
    options.backoff_base = std::chrono::milliseconds(1);
    HttpBackend http(options);

    const AgentReply reply = invoke(http, build_prompt(AgentRole::verifier, sample_task_json()));
    CHECK(reply.retry_count == 3);
    REQUIRE(reply.extracted_json.has_value());
    CHECK((*reply.extracted_json)["ok"] == 1);
    REQUIRE(reply.token_usage.has_value());
    CHECK(reply.token_usage->prompt_tokens == 12);

    server.stop();
    serve.join();
}

TEST_CASE("http backend surfaces auth failures without retrying") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 401;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread serve([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpOptions options;
    options.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    options.backoff_base = std::chrono::milliseconds(1);
    HttpBackend http(options);
    CHECK_THROWS_AS(invoke(http, build_prompt(AgentRole::verifier, sample_task_json())),
                    AuthError);
    CHECK(hits == 1);

    server.stop();
    serve.join();
}

TEST_CASE("unreachable endpoints exhaust retries with TransportError") {
    HttpOptions options;
    options.endpoint = "http://127.0.0.1:1/unreachable";
    options.backoff_base = std::chrono::milliseconds(1);
    HttpBackend http(options);
    CHECK_THROWS_AS(invoke(http, build_prompt(AgentRole::verifier, sample_task_json())),
                    TransportError);
}

TEST_CASE("recorded sessions replay byte-identically") {
    const std::string transcript = "mock_transcript_test.jsonl";
    std::remove(transcript.c_str());

    const std::vector<std::uint64_t> seeds{1, 2, 1};
    MockBackend mock;
    std::vector<AgentReply> recorded;
    {
        RecordingBackend recorder(mock, transcript);
        for (const std::uint64_t seed : seeds) {
            AgentRequest req = build_prompt(AgentRole::seed_generator, json{{"num_tasks", 2}});
            req.seed = seed;
            recorded.push_back(invoke(recorder, req));
        }
    }

    ReplayBackend replay(transcript);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        AgentRequest req = build_prompt(AgentRole::seed_generator, json{{"num_tasks", 2}});
        req.seed = seeds[i];
        const AgentReply reply = invoke(replay, req);
        CHECK(reply.raw_text == recorded[i].raw_text);
    }

    // a request that was never recorded fails loudly
    AgentRequest other = build_prompt(AgentRole::verifier, sample_task_json());
    CHECK_THROWS_AS(invoke(replay, other), TransportError);
    std::remove(transcript.c_str());
}
