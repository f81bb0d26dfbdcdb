#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "witforge/backends.hpp"
#include "witforge/metriclang.hpp"
#include "witforge/mutation.hpp"
#include "witforge/scene.hpp"
#include "witforge/schema.hpp"
#include "witforge/verification.hpp"

namespace witforge::pipeline {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class BackendKind { mock, http, replay };

const char* to_string(BackendKind k);
std::optional<BackendKind> backend_from_string(const std::string& s);

struct PipelineConfig {
    BackendKind backend = BackendKind::mock;
    std::optional<std::uint64_t> rng_seed;  // set explicitly for reproducible runs
    int steps = 12;                         // N, mutation attempts per seed
    int max_refinement_rounds = 3;          // R
    int num_seeds = 3;                      // tasks requested from the seed generator
    int workers = 4;                        // parallel campaigns
    std::size_t token_budget = agents::kDefaultTokenBudget;
    bool strict_feasibility = false;
    int scene_retries = 2;  // regeneration attempts after an invalid scene
    mutation::StageDistribution early{0.70, 0.20, 0.10};
    mutation::StageDistribution late{0.20, 0.40, 0.40};
    int pivot_quota = 3;
    int pool_quota = 4;
    int stall_skip_limit = 50;
    scene::WorkspaceSpec workspace = scene::WorkspaceSpec::defaults();
    std::map<std::string, schema::Severity> severity_overrides;
    std::string output_dir = "witforge_out";
    std::string transcript_path;  // record a JSON-lines transcript when set
    std::string replay_path;      // transcript to serve when backend = replay
    agents::HttpOptions http;
    agents::MockBackend::Options mock;
    std::string asset_index_path;
    verify::LocalIndexResolver::RemoteMode asset_remote =
        verify::LocalIndexResolver::RemoteMode::accept_all;

    /// TOML subset: top-level scalars, [sections], inline arrays. Env vars
    /// WITFORGE_LLM_ENDPOINT / _MODEL / _KEY override the [http] section.
    static PipelineConfig from_toml_file(const std::string& path);
    static PipelineConfig from_toml(const std::string& text);

    void validate() const;  // ConfigError on out-of-range values
    json snapshot() const;  // deterministic manifest form (no output paths)

    mutation::CampaignConfig campaign_config() const;
    agents::PromptConfig prompt_config() const;
    schema::ValidationOptions validation_options() const;
};

/// Backend instance plus optional recorder, per the config.
struct BackendHandle {
    std::unique_ptr<agents::AgentBackend> owned;
    std::unique_ptr<agents::RecordingBackend> recorder;
    agents::AgentBackend* use = nullptr;  // recorder when recording, else owned
};
BackendHandle make_backend(const PipelineConfig& config);

std::unique_ptr<verify::AssetResolver> make_resolver(const PipelineConfig& config);

struct SeedOutcome {
    schema::TaskSpec task;  // asset-resolved when accepted
    verify::GateDecision gate;
    std::string slug;                     // directory-safe name
    std::vector<std::string> validation_errors;
};

/// Requests seed tasks, parses and validates each, gates each through the
/// verifier, and resolves assets for accepted ones.
std::vector<SeedOutcome> run_seed_stage(const PipelineConfig& config,
                                        agents::AgentBackend& backend,
                                        verify::AssetResolver& resolver,
                                        std::uint64_t stage_seed);

struct SceneOutcome {
    int node_id = 0;
    bool ok = false;
    int attempts = 0;
    scene::SceneConfig scene;
    std::vector<std::string> violation_codes;  // last attempt, when pending
};

struct FamilyResult {
    std::string slug;
    mutation::MutationCampaign campaign;
    std::vector<SceneOutcome> scenes;
    std::string metric_source;
    bool metric_bound = false;
    std::string metric_error;
    schema::TaskFamily family;
    std::string error;  // stage failure; siblings keep running
};

struct RunManifest {
    json config_snapshot;
    std::uint64_t rng_seed = 0;
    json counts;       // reconciles exactly with the persisted artifacts
    json stage_calls;  // logical per-role invocation counters
    json seeds;
    json families = json::array();
    std::string transcript_path;

    json to_json() const;
};

/// Full pipeline: seed stage, one mutation campaign per accepted seed (in a
/// worker pool), scene generation and validation for every pool task with
/// bounded regeneration, one metric per family, and a persisted run
/// directory (tasks, scenes, trees, metric, stats.json, manifest.json).
/// Single-task failures are recorded and never abort sibling work.
RunManifest run_full(const PipelineConfig& config);

std::string slugify_name(const std::string& name);

/// Recomputes statistics from a persisted run directory and cross-checks
/// the manifest counts against the artifacts on disk.
struct StatsReport {
    json stats;
    std::vector<std::string> mismatches;  // empty when everything reconciles
    std::string table;                    // delta statistics in tabular form
};
StatsReport recompute_stats(const std::string& run_dir);

}  // namespace witforge::pipeline
