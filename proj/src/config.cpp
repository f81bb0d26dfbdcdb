#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "witforge/pipeline.hpp"

namespace witforge::pipeline {

const char* to_string(BackendKind k) {
    switch (k) {
        case BackendKind::mock: return "mock";
        case BackendKind::http: return "http";
        case BackendKind::replay: return "replay";
    }
    return "mock";
}

std::optional<BackendKind> backend_from_string(const std::string& s) {
    if (s == "mock") return BackendKind::mock;
    if (s == "http") return BackendKind::http;
    if (s == "replay") return BackendKind::replay;
    return std::nullopt;
}

namespace {

// Minimal TOML subset: [sections], key = value with string / number / bool
// / inline (possibly nested) arrays, and # comments. Values are stored as
// JSON under "<section>.<key>" (top level keys have no prefix).
class TomlReader {
public:
    explicit TomlReader(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string trimmed = trim(strip_comment(line));
            if (trimmed.empty()) continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']') fail(line_no, "unterminated section header");
                section = trim(trimmed.substr(1, trimmed.size() - 2));
                if (section.empty()) fail(line_no, "empty section name");
                continue;
            }
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos) fail(line_no, "expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) fail(line_no, "empty key");
            values_[section.empty() ? key : section + "." + key] = parse_value(value, line_no);
        }
    }

    const json* find(const std::string& key) const {
        const auto it = values_.find(key);
        return it == values_.end() ? nullptr : &it->second;
    }

    template <typename T>
    void read(const std::string& key, T& out) const {
        if (const json* v = find(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception&) {
                throw ConfigError("config key \"" + key + "\" has the wrong type");
            }
        }
    }

    const std::map<std::string, json>& all() const { return values_; }

private:
    [[noreturn]] static void fail(int line, const std::string& what) {
        throw ConfigError("config line " + std::to_string(line) + ": " + what);
    }

    static std::string strip_comment(const std::string& line) {
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '#' && !in_string) return line.substr(0, i);
        }
        return line;
    }

    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    static json parse_value(const std::string& raw, int line) {
        if (raw.empty()) fail(line, "empty value");
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
            return json(raw.substr(1, raw.size() - 2));
        }
        if (raw == "true") return json(true);
        if (raw == "false") return json(false);
        if (raw.front() == '[') {
            // inline arrays are JSON-compatible once strings use double quotes
            json parsed = json::parse(raw, nullptr, false);
            if (parsed.is_discarded()) fail(line, "malformed array");
            return parsed;
        }
        json parsed = json::parse(raw, nullptr, false);
        if (parsed.is_discarded() || !(parsed.is_number() || parsed.is_number_integer())) {
            fail(line, "malformed value \"" + raw + "\"");
        }
        return parsed;
    }

    std::map<std::string, json> values_;
};

scene::Region2D region_from_array(const json& arr, const std::string& key) {
    if (!arr.is_array() || arr.size() != 4) {
        throw ConfigError("config key \"" + key + "\" must be [x_min, x_max, y_min, y_max]");
    }
    scene::Region2D r{arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(),
                      arr[3].get<double>()};
    if (!r.valid()) throw ConfigError("config key \"" + key + "\" is an empty region");
    return r;
}

mutation::StageDistribution distribution_from_array(const json& arr, const std::string& key) {
    if (!arr.is_array() || arr.size() != 3) {
        throw ConfigError("config key \"" + key + "\" must be [pivot, trap, add]");
    }
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

}  // namespace

PipelineConfig PipelineConfig::from_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_toml(ss.str());
}

PipelineConfig PipelineConfig::from_toml(const std::string& text) {
    TomlReader toml(text);
    PipelineConfig config;

    if (const json* v = toml.find("backend")) {
        const auto kind = backend_from_string(v->get<std::string>());
        if (!kind) throw ConfigError("backend must be mock, http, or replay");
        config.backend = *kind;
    }
    if (const json* v = toml.find("rng_seed")) config.rng_seed = v->get<std::uint64_t>();
    toml.read("steps", config.steps);
    toml.read("max_refinement_rounds", config.max_refinement_rounds);
    toml.read("num_seeds", config.num_seeds);
    toml.read("workers", config.workers);
    toml.read("token_budget", config.token_budget);
    toml.read("strict_feasibility", config.strict_feasibility);
    toml.read("scene_retries", config.scene_retries);
    toml.read("pivot_quota", config.pivot_quota);
    toml.read("pool_quota", config.pool_quota);
    toml.read("stall_skip_limit", config.stall_skip_limit);
    toml.read("output_dir", config.output_dir);
    toml.read("transcript", config.transcript_path);
    toml.read("replay_transcript", config.replay_path);

    toml.read("workspace.table_height", config.workspace.table_height);
    if (const json* v = toml.find("workspace.table_surface")) {
        config.workspace.table_surface = region_from_array(*v, "workspace.table_surface");
    }
    if (const json* v = toml.find("workspace.reachable")) {
        config.workspace.reachable = region_from_array(*v, "workspace.reachable");
    }
    if (const json* v = toml.find("workspace.forbidden")) {
        if (!v->is_array()) throw ConfigError("workspace.forbidden must be an array of regions");
        config.workspace.forbidden.clear();
        for (const auto& r : *v) {
            config.workspace.forbidden.push_back(region_from_array(r, "workspace.forbidden"));
        }
    }

    if (const json* v = toml.find("stage_distributions.early")) {
        config.early = distribution_from_array(*v, "stage_distributions.early");
    }
    if (const json* v = toml.find("stage_distributions.late")) {
        config.late = distribution_from_array(*v, "stage_distributions.late");
    }

    for (const auto& [key, value] : toml.all()) {
        if (key.rfind("severity.", 0) != 0) continue;
        const std::string code = key.substr(9);
        const std::string level = value.get<std::string>();
        if (level == "error") {
            config.severity_overrides[code] = schema::Severity::error;
        } else if (level == "warning") {
            config.severity_overrides[code] = schema::Severity::warning;
        } else {
            throw ConfigError("severity." + code + " must be \"error\" or \"warning\"");
        }
    }

    toml.read("http.endpoint", config.http.endpoint);
    toml.read("http.model", config.http.model);
    toml.read("http.key", config.http.api_key);
    toml.read("http.max_retries", config.http.max_retries);
    if (const json* v = toml.find("http.backoff_ms")) {
        config.http.backoff_base = std::chrono::milliseconds(v->get<int>());
    }

    toml.read("mock.stubborn_rolls", config.mock.stubborn_rolls);
    toml.read("mock.contract_rolls", config.mock.contract_rolls);
    toml.read("mock.transient_rolls", config.mock.transient_rolls);
    toml.read("mock.adversarial", config.mock.adversarial);

    toml.read("assets.index", config.asset_index_path);
    if (const json* v = toml.find("assets.remote")) {
        const std::string mode = v->get<std::string>();
        if (mode == "accept_all") {
            config.asset_remote = verify::LocalIndexResolver::RemoteMode::accept_all;
        } else if (mode == "deny_all") {
            config.asset_remote = verify::LocalIndexResolver::RemoteMode::deny_all;
        } else {
            throw ConfigError("assets.remote must be accept_all or deny_all");
        }
    }

    // environment overrides for the transport
    const agents::HttpOptions env = agents::HttpOptions::from_env();
    if (!env.endpoint.empty()) config.http.endpoint = env.endpoint;
    if (!env.model.empty()) config.http.model = env.model;
    if (!env.api_key.empty()) config.http.api_key = env.api_key;

    config.validate();
    return config;
}

void PipelineConfig::validate() const {
    if (max_refinement_rounds < 1) throw ConfigError("max_refinement_rounds must be >= 1");
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (num_seeds < 1) throw ConfigError("num_seeds must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (scene_retries < 0) throw ConfigError("scene_retries must be >= 0");
    try {
        early.validate();
        late.validate();
    } catch (const mutation::ConfigError& e) {
        throw ConfigError(e.what());
    }
    if (backend == BackendKind::replay && replay_path.empty()) {
        throw ConfigError("replay backend needs replay_transcript");
    }
}

json PipelineConfig::snapshot() const {
    json overrides = json::object();
    for (const auto& [code, severity] : severity_overrides) {
        overrides[code] = severity == schema::Severity::error ? "error" : "warning";
    }
    // output paths and credentials stay out of the snapshot
    return {{"backend", to_string(backend)},
            {"steps", steps},
            {"max_refinement_rounds", max_refinement_rounds},
            {"num_seeds", num_seeds},
            {"workers", workers},
            {"token_budget", token_budget},
            {"strict_feasibility", strict_feasibility},
            {"scene_retries", scene_retries},
            {"stage_distributions",
             {{"early", {early.pivot, early.trap, early.add}},
              {"late", {late.pivot, late.trap, late.add}}}},
            {"pivot_quota", pivot_quota},
            {"pool_quota", pool_quota},
            {"stall_skip_limit", stall_skip_limit},
            {"workspace", workspace.to_json()},
            {"severity_overrides", std::move(overrides)}};
}

mutation::CampaignConfig PipelineConfig::campaign_config() const {
    mutation::CampaignConfig c;
    c.max_refinement_rounds = max_refinement_rounds;
    c.steps = steps;
    c.early = early;
    c.late = late;
    c.pivot_quota = pivot_quota;
    c.pool_quota = pool_quota;
    c.stall_skip_limit = stall_skip_limit;
    return c;
}

agents::PromptConfig PipelineConfig::prompt_config() const {
    agents::PromptConfig p;
    p.workspace = workspace;
    return p;
}

schema::ValidationOptions PipelineConfig::validation_options() const {
    schema::ValidationOptions opts;
    opts.require_success_criteria = true;  // pipeline tasks carry criteria
    opts.severity_overrides = severity_overrides;
    return opts;
}

}  // namespace witforge::pipeline
