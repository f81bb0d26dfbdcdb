#include "witforge/schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace witforge::schema {

const char* to_string(Category c) {
    switch (c) {
        case Category::geometry: return "geometry";
        case Category::material: return "material";
        case Category::assembly: return "assembly";
    }
    return "geometry";
}

std::optional<Category> category_from_string(const std::string& s) {
    if (s == "geometry") return Category::geometry;
    if (s == "material") return Category::material;
    if (s == "assembly") return Category::assembly;
    return std::nullopt;
}

namespace {

std::string require_string(const json& doc, const char* key, const std::string& base) {
    const auto it = doc.find(key);
    if (it == doc.end()) throw SchemaError(base + "/" + key, "missing required field");
    if (!it->is_string()) throw SchemaError(base + "/" + key, "expected a string");
    return it->get<std::string>();
}

std::vector<std::string> optional_string_array(const json& doc, const char* key,
                                               const std::string& base) {
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return {};
    if (!it->is_array()) throw SchemaError(base + "/" + key, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& e = (*it)[i];
        if (!e.is_string()) {
            throw SchemaError(base + "/" + key + "/" + std::to_string(i), "expected a string");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::optional<std::string> optional_string(const json& doc, const char* key,
                                           const std::string& base) {
    const auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw SchemaError(base + "/" + key, "expected a string or null");
    return it->get<std::string>();
}

ObjectSpec parse_object(const json& doc, const std::string& base) {
    if (!doc.is_object()) throw SchemaError(base, "expected an object");
    ObjectSpec o;
    o.object_name = require_string(doc, "object_name", base);

    o.appearance_attribute = optional_string_array(doc, "appearance_attribute", base);
    const auto geometric = optional_string_array(doc, "geometric_attribute", base);
    o.appearance_attribute.insert(o.appearance_attribute.end(), geometric.begin(),
                                  geometric.end());

    o.functional_attribute = optional_string_array(doc, "functional_attribute", base);
    const auto material = optional_string_array(doc, "material_attribute", base);
    o.functional_attribute.insert(o.functional_attribute.end(), material.begin(),
                                  material.end());

    o.potential_instances = optional_string_array(doc, "potential_instances", base);
    const bool used_example_alias =
        o.potential_instances.empty() && doc.contains("example_objects");
    if (used_example_alias) {
        o.potential_instances = optional_string_array(doc, "example_objects", base);
    }

    o.use_primitive = optional_string(doc, "use_primitive", base);

    const bool has_asset = doc.contains("asset_id") && !doc["asset_id"].is_null();
    const bool has_alias = doc.contains("assed_id") && !doc["assed_id"].is_null();
    if (has_asset && has_alias) {
        throw SchemaError(base + "/assed_id", "asset_id and its alias are both bound");
    }
    o.asset_id = optional_string(doc, has_alias ? "assed_id" : "asset_id", base);

    static const std::set<std::string> consumed{
        "object_name",    "appearance_attribute", "geometric_attribute",
        "functional_attribute", "material_attribute",  "potential_instances",
        "use_primitive",  "asset_id",             "assed_id"};
    for (const auto& [key, value] : doc.items()) {
        if (consumed.count(key)) continue;
        if (key == "example_objects" && used_example_alias) continue;
        o.extras[key] = value;
    }
    return o;
}

}  // namespace

TaskSpec parse_task(const std::string& document, const ParseOptions& opts) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SyntaxError(e.what());
    }
    return parse_task_json(doc, opts);
}

TaskSpec parse_task_json(const json& doc, const ParseOptions& opts) {
    if (!doc.is_object()) throw SchemaError("", "expected a task object");

    TaskSpec t;
    t.task_name = require_string(doc, "task_name", "");

    const auto objs = doc.find("object_list");
    if (objs == doc.end()) throw SchemaError("/object_list", "missing required field");
    if (!objs->is_array()) throw SchemaError("/object_list", "expected an array");
    for (std::size_t i = 0; i < objs->size(); ++i) {
        t.object_list.push_back(parse_object((*objs)[i], "/object_list/" + std::to_string(i)));
    }

    t.initial_scene_setup = require_string(doc, "initial_scene_setup", "");
    t.task_instruction = require_string(doc, "task_instruction", "");
    t.potential_solution = require_string(doc, "potential_solution", "");
    t.task_description = require_string(doc, "task_description", "");

    // Legacy documents predate task_success_criteria; absence binds empty.
    if (doc.contains("task_success_criteria")) {
        if (!doc["task_success_criteria"].is_string()) {
            throw SchemaError("/task_success_criteria", "expected a string");
        }
        t.task_success_criteria = doc["task_success_criteria"].get<std::string>();
    }

    t.category = opts.default_category;
    if (doc.contains("category")) {
        if (!doc["category"].is_string()) throw SchemaError("/category", "expected a string");
        const auto c = category_from_string(doc["category"].get<std::string>());
        if (!c) throw SchemaError("/category", "unknown category");
        t.category = *c;
    }

    if (doc.contains("difficulty") && !doc["difficulty"].is_null()) {
        if (!doc["difficulty"].is_number_integer()) {
            throw SchemaError("/difficulty", "expected an integer");
        }
        t.difficulty = doc["difficulty"].get<int>();
    }

    static const std::set<std::string> consumed{
        "task_name",        "object_list",       "initial_scene_setup",
        "task_instruction", "task_success_criteria", "potential_solution",
        "task_description", "category",          "difficulty"};
    for (const auto& [key, value] : doc.items()) {
        if (consumed.count(key)) continue;
        t.extras[key] = value;
    }
    return t;
}

json to_json(const ObjectSpec& o) {
    json j = json::object();
    j["object_name"] = o.object_name;
    j["appearance_attribute"] = o.appearance_attribute;
    j["functional_attribute"] = o.functional_attribute;
    j["potential_instances"] = o.potential_instances;
    j["use_primitive"] = o.use_primitive ? json(*o.use_primitive) : json(nullptr);
    j["asset_id"] = o.asset_id ? json(*o.asset_id) : json(nullptr);
    for (const auto& [key, value] : o.extras.items()) j[key] = value;
    return j;
}

json to_json(const TaskSpec& t) {
    json j = json::object();
    j["task_name"] = t.task_name;
    j["object_list"] = json::array();
    for (const auto& o : t.object_list) j["object_list"].push_back(to_json(o));
    j["initial_scene_setup"] = t.initial_scene_setup;
    j["task_instruction"] = t.task_instruction;
    j["task_success_criteria"] = t.task_success_criteria;
    j["potential_solution"] = t.potential_solution;
    j["task_description"] = t.task_description;
    j["category"] = to_string(t.category);
    if (t.difficulty) j["difficulty"] = *t.difficulty;
    for (const auto& [key, value] : t.extras.items()) j[key] = value;
    return j;
}

std::string canonical_json(const TaskSpec& t) {
    return to_json(t).dump(2) + "\n";
}

bool ValidationOutcome::error_free() const {
    return std::none_of(violations.begin(), violations.end(),
                        [](const Violation& v) { return v.severity == Severity::error; });
}

std::vector<Violation> ValidationOutcome::errors() const {
    std::vector<Violation> out;
    for (const auto& v : violations) {
        if (v.severity == Severity::error) out.push_back(v);
    }
    return out;
}

namespace {

std::vector<std::string> tokens_lower(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : s) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

bool name_contains_token(const std::string& name, const std::string& token) {
    std::string want;
    for (const char ch : token) {
        want.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    for (const auto& tok : tokens_lower(name)) {
        if (tok == want) return true;
    }
    return false;
}

ValidationOutcome validate_task(const TaskSpec& t, const ValidationOptions& opts) {
    ValidationOutcome out;
    auto severity_for = [&](const char* code, Severity def) {
        const auto it = opts.severity_overrides.find(code);
        return it != opts.severity_overrides.end() ? it->second : def;
    };
    auto add = [&](const char* code, Severity def, const std::string& path,
                   const std::string& message) {
        out.violations.push_back({code, severity_for(code, def), path, message});
    };

    static const std::vector<std::string> articles{"a", "an", "the"};
    static const std::vector<std::string> reserved{"pivot", "trap", "related", "unrelated"};

    std::set<std::string> seen;
    for (std::size_t i = 0; i < t.object_list.size(); ++i) {
        const auto& o = t.object_list[i];
        const std::string base = "/object_list/" + std::to_string(i);

        if (o.object_name.empty()) {
            add(codes::kEmptyName, Severity::error, base + "/object_name",
                "object_name is empty");
        }
        if (!seen.insert(o.object_name).second) {
            add(codes::kDuplicateName, Severity::error, base + "/object_name",
                "duplicate object_name \"" + o.object_name + "\"");
        }
        for (const auto& tok : articles) {
            if (name_contains_token(o.object_name, tok)) {
                add(codes::kArticleToken, opts.article_severity, base + "/object_name",
                    "object_name \"" + o.object_name + "\" contains article \"" + tok + "\"");
            }
        }
        for (const auto& tok : reserved) {
            if (name_contains_token(o.object_name, tok)) {
                add(codes::kReservedToken, Severity::error, base + "/object_name",
                    "object_name \"" + o.object_name + "\" contains reserved token \"" + tok +
                        "\"");
            }
        }
        if (o.use_primitive && o.asset_id) {
            add(codes::kBothAssetFields, Severity::error, base,
                "use_primitive and asset_id are both set");
        }
        if (!o.use_primitive && !o.asset_id && o.potential_instances.empty()) {
            add(codes::kMissingInstances, Severity::error, base + "/potential_instances",
                "no potential instances and no asset binding");
        }
    }

    if (t.difficulty && (*t.difficulty < 1 || *t.difficulty > 5)) {
        add(codes::kRangeDifficulty, Severity::error, "/difficulty",
            "difficulty " + std::to_string(*t.difficulty) + " outside 1..5");
    }
    if (opts.require_success_criteria && t.task_success_criteria.empty()) {
        add(codes::kMissingCriteria, Severity::error, "/task_success_criteria",
            "task_success_criteria is required");
    }
    return out;
}

std::vector<std::string> extract_quoted_names(const std::string& text) {
    auto is_alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    std::vector<std::size_t> delims;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\'') continue;
        const bool word_before = i > 0 && is_alnum(text[i - 1]);
        const bool word_after = i + 1 < text.size() && is_alnum(text[i + 1]);
        if (word_before && word_after) continue;  // contraction, not a delimiter
        delims.push_back(i);
    }
    std::vector<std::string> out;
    for (std::size_t k = 0; k + 1 < delims.size(); k += 2) {
        std::string name = text.substr(delims[k] + 1, delims[k + 1] - delims[k] - 1);
        if (name.empty() || name.find('\n') != std::string::npos) continue;
        out.push_back(std::move(name));
    }
    return out;
}

std::vector<std::string> referenced_object_names(const TaskSpec& t) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const std::string* field : {&t.initial_scene_setup, &t.task_success_criteria,
                                     &t.potential_solution, &t.task_description}) {
        for (auto& name : extract_quoted_names(*field)) {
            if (seen.insert(name).second) out.push_back(std::move(name));
        }
    }
    return out;
}

}  // namespace witforge::schema
