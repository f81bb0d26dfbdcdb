#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "witforge/schema.hpp"

namespace witforge::verify {

using json = nlohmann::json;

class ReportError : public std::runtime_error {
public:
    explicit ReportError(const std::string& what) : std::runtime_error(what) {}
};

class ResolverError : public std::runtime_error {
public:
    explicit ResolverError(const std::string& what) : std::runtime_error(what) {}
};

enum class SimDifficulty { easy, hard, impossible };
enum class Feasibility { very_feasible, kind_of_feasible, not_feasible };

const char* to_string(SimDifficulty d);
const char* to_string(Feasibility f);  // wire form with spaces

struct CompletenessBlock {
    bool complete = true;
    std::vector<std::string> missing_objects;
    std::string reason;
};

struct SimulatabilityBlock {
    SimDifficulty difficulty = SimDifficulty::easy;
    std::vector<std::string> challenging_objects;
    std::string reason;
};

struct FeasibilityBlock {
    Feasibility level = Feasibility::very_feasible;
    std::string not_feasible_step;
    std::string reason;
};

struct EfficiencyBlock {
    bool efficient = true;
    std::string bypass_solution;
    std::vector<std::string> bypass_objects;
};

struct DifficultyBlock {
    int score = 1;  // 1..5
    std::string reason;
};

struct UpdatedObject {
    std::string object_name;
    std::optional<std::string> use_primitive;
    std::optional<std::string> asset_id;
};

/// Structured verifier verdict, wire-compatible with the reference report
/// format (feasibility values with spaces, score as a string, the
/// "assed_id" alias, and an optional completeness block).
struct VerificationReport {
    std::optional<CompletenessBlock> completeness;
    SimulatabilityBlock simulatability;
    FeasibilityBlock solution_feasibility;
    EfficiencyBlock solution_efficiency;
    DifficultyBlock difficulty;
    std::vector<UpdatedObject> updated_object_list;

    static VerificationReport from_json(const json& doc);  // throws ReportError
    json to_json() const;
};

enum class Verdict { accepted, rejected };

struct GateDecision {
    Verdict verdict = Verdict::rejected;
    std::vector<std::string> reasons;  // rejection codes plus advisories
    std::string feedback;              // forwarded to the mutator on rejection
    std::optional<int> operational_difficulty;  // set when accepted
    std::vector<std::string> notes;    // e.g. agent/local completeness disagreement

    bool accepted() const { return verdict == Verdict::accepted; }
    bool has_reason(const std::string& code) const;
    json to_json() const;
};

namespace codes {
inline constexpr const char* kIncomplete = "INCOMPLETE";
inline constexpr const char* kNotSimulatable = "NOT_SIMULATABLE";
inline constexpr const char* kNotFeasible = "NOT_FEASIBLE";
inline constexpr const char* kBypassExists = "BYPASS_EXISTS";
inline constexpr const char* kSoftFeasibility = "SOFT_FEASIBILITY";
inline constexpr const char* kAssetUnavailable = "ASSET_UNAVAILABLE";
}  // namespace codes

struct CompletenessResult {
    bool complete = true;
    std::vector<std::string> missing_objects;
};

/// Local, deterministic completeness predicate: every single-quoted name in
/// the setup/criteria/solution/description texts (except 'table' and
/// 'robot') must be in the object list. This verdict always overrides the
/// agent-reported one.
CompletenessResult completeness_check(const schema::TaskSpec& t);

struct GateOptions {
    bool strict_feasibility = false;  // when set, kind-of-feasible rejects too
};

/// Accept/reject gate over the report plus the local completeness check.
/// Rejected iff incomplete, impossible to simulate, infeasible, or
/// bypassable; kind-of-feasible accepts with a SOFT_FEASIBILITY advisory.
GateDecision gate_decision(const schema::TaskSpec& t, const VerificationReport& r,
                           const GateOptions& opts = {});

class AssetResolver {
public:
    virtual ~AssetResolver() = default;
    /// Asset path for the object, or empty when nothing matches (NOT_FOUND).
    virtual std::optional<std::string> resolve(const schema::ObjectSpec& o) = 0;
};

/// Local index keyed by normalized potential-instance phrases, with a
/// deterministic stand-in for the remote asset store behind it.
class LocalIndexResolver : public AssetResolver {
public:
    enum class RemoteMode { accept_all, deny_all };

    LocalIndexResolver(std::map<std::string, std::string> index, RemoteMode mode)
        : index_(std::move(index)), mode_(mode) {}

    static std::map<std::string, std::string> load_index(const std::string& path);  // ResolverError

    std::optional<std::string> resolve(const schema::ObjectSpec& o) override;

    static std::string normalize(const std::string& phrase);

private:
    std::map<std::string, std::string> index_;
    RemoteMode mode_;
};

/// Merges the report's updated_object_list into the task and resolves any
/// object still lacking an asset binding. A NOT_FOUND demotes the decision
/// to rejected with ASSET_UNAVAILABLE.
schema::TaskSpec resolve_assets(const schema::TaskSpec& t, const VerificationReport& r,
                                AssetResolver& resolver, GateDecision& decision);

}  // namespace witforge::verify
