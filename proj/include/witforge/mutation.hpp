#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "witforge/agents.hpp"
#include "witforge/rng.hpp"
#include "witforge/schema.hpp"
#include "witforge/verification.hpp"

namespace witforge::mutation {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class CampaignStall : public std::runtime_error {
public:
    explicit CampaignStall(const std::string& what) : std::runtime_error(what) {}
};

enum class StrategyClass { pivot, trap, add };
enum class MutationKind { pivot, trap, add_related, add_unrelated };

StrategyClass class_of(MutationKind kind);
const char* to_string(StrategyClass cls);
const char* to_string(MutationKind kind);          // pivot / trap / add(related) / add(unrelated)
const char* wire_mutation_type(MutationKind kind); // pivot / trap / related / unrelated
std::optional<MutationKind> kind_from_string(const std::string& s);

/// Categorical distribution over strategy classes for one campaign stage.
struct StageDistribution {
    double pivot = 0.0;
    double trap = 0.0;
    double add = 0.0;

    void validate() const;  // ConfigError unless non-negative and summing to 1 (1e-9)
};

struct CampaignConfig {
    int max_refinement_rounds = 3;  // R
    int steps = 12;                 // N, mutation attempts per seed
    StageDistribution early{0.70, 0.20, 0.10};
    StageDistribution late{0.20, 0.40, 0.40};
    int pivot_quota = 3;       // accepted pivots that flip the stage
    int pool_quota = 4;        // pool size that flips the stage
    int stall_skip_limit = 50; // consecutive skips before CampaignStall
};

enum class Stage { early, late };

inline constexpr const char* kMutationContractCode = "MUTATION_CONTRACT";
inline constexpr const char* kMalformedReplyCode = "MALFORMED_REPLY";

struct MutationNode {
    int id = 0;
    schema::TaskSpec task;
    std::optional<int> parent;               // absent for the seed
    std::optional<MutationKind> strategy;    // absent for the seed
    bool accepted = false;
    int rounds_used = 0;                     // verifier calls spent on this candidate
    std::optional<int> difficulty;           // set when accepted
    std::optional<int> delta;                // difficulty - parent difficulty
    std::vector<std::string> reject_reasons;
    std::optional<json> report;              // final verifier report, for offline re-checks

    friend bool operator==(const MutationNode&, const MutationNode&) = default;
};

struct MutationCampaign {
    std::vector<MutationNode> tree;  // node id == index; node 0 is the seed
    std::vector<int> pool;           // accepted ids, ascending
    std::map<std::pair<int, StrategyClass>, int> apply_count;
    Stage stage = Stage::early;
    int remaining_steps = 0;
    std::uint64_t rng_seed = 0;
    CampaignConfig config;
    Rng rng{0};
    int consecutive_skips = 0;
    int total_skips = 0;
    bool stalled = false;

    const MutationNode& seed() const { return tree.front(); }
    int accepted_count() const;  // accepted non-seed nodes
};

struct CampaignContext {
    agents::AgentBackend& backend;
    agents::PromptConfig prompt_config;
    verify::AssetResolver* resolver = nullptr;  // optional asset resolution after the gate
    verify::GateOptions gate_options;
};

/// Draws a strategy from the stage distribution (then the add sub-kind
/// uniformly) using the campaign RNG.
MutationKind sample_strategy(MutationCampaign& c);

/// One campaign step: sample a pool task and a strategy; honor the per-(task,
/// strategy-class) cap of 2 with a free skip; otherwise mutate, refine up
/// to R verification rounds, and record the accepted or rejected node.
/// Accepted candidates are re-checked locally (validation plus the
/// additive-only contract); violations downgrade them to rejected.
/// Throws CampaignStall after config.stall_skip_limit consecutive skips.
void step(MutationCampaign& c, const CampaignContext& ctx);

bool should_switch_stage(const MutationCampaign& c);

MutationCampaign new_campaign(const schema::TaskSpec& seed_task, int seed_difficulty,
                              const CampaignConfig& config, std::uint64_t rng_seed);

/// Runs step until the step budget is exhausted or the campaign stalls
/// (stall is recorded, not propagated).
MutationCampaign run_campaign(const schema::TaskSpec& seed_task, int seed_difficulty,
                              const CampaignConfig& config, std::uint64_t rng_seed,
                              const CampaignContext& ctx);

/// Parent-object preservation rules: Trap/Add keep every parent object;
/// Pivot keeps every object quoted in the parent's success criteria.
/// Returns true when the candidate honors the contract.
bool mutation_contract_holds(const schema::TaskSpec& parent, const schema::TaskSpec& candidate,
                             MutationKind kind);

struct Moments {
    int count = 0;
    std::optional<double> mean;
    std::optional<double> max;
    std::optional<double> min;
    std::optional<double> std_dev;
};

struct DeltaStatistics {
    Moments pivot;
    Moments trap;
    Moments add;

    std::string to_table() const;  // strategies as columns, count/mean/max/min/std as rows
    json to_json() const;
};

DeltaStatistics delta_statistics(const std::vector<MutationCampaign>& campaigns);
Moments moments_of(const std::vector<double>& values);

enum class TreeFormat { dot, json_format };

std::string export_tree(const MutationCampaign& c, TreeFormat format);

json tree_to_json(const MutationCampaign& c);
std::vector<MutationNode> tree_from_json(const json& doc);

}  // namespace witforge::mutation
