#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace witforge::schema {

using json = nlohmann::json;

class SyntaxError : public std::runtime_error {
public:
    explicit SyntaxError(const std::string& what) : std::runtime_error(what) {}
};

class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string pointer, const std::string& what)
        : std::runtime_error(pointer + ": " + what), path(std::move(pointer)) {}
    std::string path;  // JSON-pointer-style location of the offending field
};

enum class Category { geometry, material, assembly };

const char* to_string(Category c);
std::optional<Category> category_from_string(const std::string& s);

struct ObjectSpec {
    std::string object_name;
    std::vector<std::string> appearance_attribute;
    std::vector<std::string> functional_attribute;
    std::vector<std::string> potential_instances;
    std::optional<std::string> use_primitive;
    std::optional<std::string> asset_id;
    json extras = json::object();  // unknown wire fields, preserved for round-tripping

    friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct TaskSpec {
    std::string task_name;
    std::vector<ObjectSpec> object_list;
    std::string initial_scene_setup;
    std::string task_instruction;
    std::string task_success_criteria;  // empty when absent from a legacy document
    std::string potential_solution;
    std::string task_description;
    Category category = Category::geometry;
    std::optional<int> difficulty;
    json extras = json::object();

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct TaskFamily {
    std::string seed_id;
    std::vector<std::string> member_ids;  // includes the seed
    std::string metric_id;                // exactly one metric per family

    friend bool operator==(const TaskFamily&, const TaskFamily&) = default;
};

struct ParseOptions {
    // The wire schema has no category field; callers supply the default
    // (from a sidecar manifest or CLI flag). An explicit "category" key in
    // the document wins.
    Category default_category = Category::geometry;
};

/// Parses a task document. Accepted wire forms:
///  - the current shape: appearance_attribute / functional_attribute /
///    potential_instances;
///  - the legacy split: geometric_attribute merges into appearance,
///    material_attribute into functional, example_objects stands in for
///    potential_instances;
///  - "assed_id" as an alias of asset_id (both present is an error).
/// Unknown fields are preserved in extras.
TaskSpec parse_task(const std::string& document, const ParseOptions& opts = {});
TaskSpec parse_task_json(const json& doc, const ParseOptions& opts = {});

/// Deterministic serialization: sorted keys, canonical field names, legacy
/// aliases normalized. parse_task(canonical_json(t)) == t.
std::string canonical_json(const TaskSpec& t);
json to_json(const TaskSpec& t);
json to_json(const ObjectSpec& o);

enum class Severity { error, warning };

struct Violation {
    std::string code;
    Severity severity = Severity::error;
    std::string path;
    std::string message;
};

struct ValidationOutcome {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool error_free() const;
    std::vector<Violation> errors() const;
};

struct ValidationOptions {
    // The reference schema document itself breaks the article-token rule,
    // so that check defaults to a warning.
    Severity article_severity = Severity::warning;
    bool require_success_criteria = false;
    std::map<std::string, Severity> severity_overrides;
};

ValidationOutcome validate_task(const TaskSpec& t, const ValidationOptions& opts = {});

// Stable violation codes.
namespace codes {
inline constexpr const char* kDuplicateName = "DUPLICATE_NAME";
inline constexpr const char* kReservedToken = "RESERVED_TOKEN";
inline constexpr const char* kArticleToken = "ARTICLE_TOKEN";
inline constexpr const char* kMissingInstances = "MISSING_INSTANCES";
inline constexpr const char* kBothAssetFields = "BOTH_ASSET_FIELDS";
inline constexpr const char* kRangeDifficulty = "RANGE_DIFFICULTY";
inline constexpr const char* kEmptyName = "EMPTY_NAME";
inline constexpr const char* kMissingCriteria = "MISSING_CRITERIA";
}  // namespace codes

/// Names between single-quote delimiters. An apostrophe with alphanumerics
/// on both sides is treated as part of a word (contraction), not a delimiter.
std::vector<std::string> extract_quoted_names(const std::string& text);

/// Quoted names across setup, success criteria, solution, and description,
/// deduplicated in order of first appearance.
std::vector<std::string> referenced_object_names(const TaskSpec& t);

/// Case-insensitive word-boundary token test ("a" matches "a large ball",
/// not "ball").
bool name_contains_token(const std::string& name, const std::string& token);

}  // namespace witforge::schema
