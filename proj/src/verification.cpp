#include "witforge/verification.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace witforge::verify {

const char* to_string(SimDifficulty d) {
    switch (d) {
        case SimDifficulty::easy: return "easy";
        case SimDifficulty::hard: return "hard";
        case SimDifficulty::impossible: return "impossible";
    }
    return "easy";
}

const char* to_string(Feasibility f) {
    switch (f) {
        case Feasibility::very_feasible: return "very feasible";
        case Feasibility::kind_of_feasible: return "kind of feasible";
        case Feasibility::not_feasible: return "not feasible";
    }
    return "very feasible";
}

namespace {

std::string get_string(const json& j, const char* key) {
    return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : std::string();
}

std::vector<std::string> get_strings(const json& j, const char* key) {
    std::vector<std::string> out;
    if (j.contains(key) && j[key].is_array()) {
        for (const auto& e : j[key]) {
            if (e.is_string()) out.push_back(e.get<std::string>());
        }
    }
    return out;
}

bool parse_yes_no(const json& j, const char* key, const std::string& where) {
    const std::string v = get_string(j, key);
    if (v == "yes") return true;
    if (v == "no") return false;
    throw ReportError(where + ": expected \"yes\" or \"no\", got \"" + v + "\"");
}

SimDifficulty parse_difficulty_enum(const std::string& v) {
    if (v == "easy") return SimDifficulty::easy;
    if (v == "hard") return SimDifficulty::hard;
    if (v == "impossible") return SimDifficulty::impossible;
    throw ReportError("simulatability.difficulty: unknown value \"" + v + "\"");
}

Feasibility parse_feasibility_enum(std::string v) {
    std::replace(v.begin(), v.end(), '_', ' ');
    if (v == "very feasible" || v == "feasible") return Feasibility::very_feasible;
    if (v == "kind of feasible") return Feasibility::kind_of_feasible;
    if (v == "not feasible") return Feasibility::not_feasible;
    throw ReportError("solution_feasibility.feasibility: unknown value \"" + v + "\"");
}

int parse_score(const json& j) {
    int score = 0;
    if (j.is_number_integer()) {
        score = j.get<int>();
    } else if (j.is_string()) {
        try {
            score = std::stoi(j.get<std::string>());
        } catch (const std::exception&) {
            throw ReportError("difficulty.score: not a number: \"" + j.get<std::string>() + "\"");
        }
    } else {
        throw ReportError("difficulty.score: expected an integer or numeric string");
    }
    if (score < 1 || score > 5) {
        throw ReportError("difficulty.score " + std::to_string(score) + " outside 1..5");
    }
    return score;
}

}  // namespace

VerificationReport VerificationReport::from_json(const json& doc) {
    if (!doc.is_object()) throw ReportError("verification report must be a JSON object");
    VerificationReport r;

    if (doc.contains("completeness") && doc["completeness"].is_object()) {
        const auto& c = doc["completeness"];
        CompletenessBlock block;
        block.complete = parse_yes_no(c, "completeness", "completeness.completeness");
        block.missing_objects = get_strings(c, "missing_objects");
        block.reason = get_string(c, "reason");
        r.completeness = std::move(block);
    }

    if (!doc.contains("simulatability")) throw ReportError("report missing simulatability");
    {
        const auto& s = doc["simulatability"];
        r.simulatability.difficulty = parse_difficulty_enum(get_string(s, "difficulty"));
        r.simulatability.challenging_objects = get_strings(s, "challenging_objects");
        r.simulatability.reason = get_string(s, "reason");
    }

    if (!doc.contains("solution_feasibility")) throw ReportError("report missing solution_feasibility");
    {
        const auto& f = doc["solution_feasibility"];
        r.solution_feasibility.level = parse_feasibility_enum(get_string(f, "feasibility"));
        r.solution_feasibility.not_feasible_step = get_string(f, "not_feasible_step");
        r.solution_feasibility.reason = get_string(f, "reason");
    }

    if (!doc.contains("solution_efficiency")) throw ReportError("report missing solution_efficiency");
    {
        const auto& e = doc["solution_efficiency"];
        r.solution_efficiency.efficient =
            parse_yes_no(e, "efficiency", "solution_efficiency.efficiency");
        r.solution_efficiency.bypass_solution = get_string(e, "bypass_solution");
        r.solution_efficiency.bypass_objects = get_strings(e, "bypass_objects");
    }

    if (!doc.contains("difficulty")) throw ReportError("report missing difficulty");
    r.difficulty.score = parse_score(doc["difficulty"].contains("score")
                                         ? doc["difficulty"]["score"]
                                         : json());
    r.difficulty.reason = get_string(doc["difficulty"], "reason");

    if (doc.contains("updated_object_list")) {
        if (!doc["updated_object_list"].is_array()) {
            throw ReportError("updated_object_list must be an array");
        }
        for (const auto& u : doc["updated_object_list"]) {
            UpdatedObject obj;
            obj.object_name = get_string(u, "object_name");
            if (obj.object_name.empty()) {
                throw ReportError("updated_object_list entry missing object_name");
            }
            if (u.contains("use_primitive") && !u["use_primitive"].is_null()) {
                obj.use_primitive = u["use_primitive"].get<std::string>();
            }
            const bool has_asset = u.contains("asset_id") && !u["asset_id"].is_null();
            const bool has_alias = u.contains("assed_id") && !u["assed_id"].is_null();
            if (has_asset && has_alias) {
                throw ReportError("updated_object_list: asset_id and its alias both bound");
            }
            if (has_asset) obj.asset_id = u["asset_id"].get<std::string>();
            if (has_alias) obj.asset_id = u["assed_id"].get<std::string>();
            r.updated_object_list.push_back(std::move(obj));
        }
    }
    return r;
}

json VerificationReport::to_json() const {
    json doc = json::object();
    if (completeness) {
        doc["completeness"] = {{"completeness", completeness->complete ? "yes" : "no"},
                               {"missing_objects", completeness->missing_objects},
                               {"reason", completeness->reason}};
    }
    doc["simulatability"] = {{"difficulty", to_string(simulatability.difficulty)},
                             {"challenging_objects", simulatability.challenging_objects},
                             {"reason", simulatability.reason}};
    doc["solution_feasibility"] = {{"feasibility", to_string(solution_feasibility.level)},
                                   {"not_feasible_step", solution_feasibility.not_feasible_step},
                                   {"reason", solution_feasibility.reason}};
    doc["solution_efficiency"] = {{"efficiency", solution_efficiency.efficient ? "yes" : "no"},
                                  {"bypass_solution", solution_efficiency.bypass_solution},
                                  {"bypass_objects", solution_efficiency.bypass_objects}};
    doc["difficulty"] = {{"score", std::to_string(difficulty.score)},
                         {"reason", difficulty.reason}};
    if (!updated_object_list.empty()) {
        json arr = json::array();
        for (const auto& u : updated_object_list) {
            arr.push_back({{"object_name", u.object_name},
                           {"use_primitive", u.use_primitive ? json(*u.use_primitive) : json()},
                           {"asset_id", u.asset_id ? json(*u.asset_id) : json()}});
        }
        doc["updated_object_list"] = std::move(arr);
    }
    return doc;
}

bool GateDecision::has_reason(const std::string& code) const {
    return std::find(reasons.begin(), reasons.end(), code) != reasons.end();
}

json GateDecision::to_json() const {
    json doc = {{"verdict", accepted() ? "accepted" : "rejected"},
                {"reasons", reasons},
                {"feedback", feedback}};
    if (operational_difficulty) doc["operational_difficulty"] = *operational_difficulty;
    if (!notes.empty()) doc["notes"] = notes;
    return doc;
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

CompletenessResult completeness_check(const schema::TaskSpec& t) {
    std::set<std::string> known;
    for (const auto& o : t.object_list) known.insert(o.object_name);

    CompletenessResult result;
    std::set<std::string> reported;
    for (const auto& name : schema::referenced_object_names(t)) {
        const std::string low = lower(name);
        if (low == "table" || low == "robot") continue;
        if (!known.count(name) && reported.insert(name).second) {
            result.missing_objects.push_back(name);
        }
    }
    result.complete = result.missing_objects.empty();
    return result;
}

GateDecision gate_decision(const schema::TaskSpec& t, const VerificationReport& r,
                           const GateOptions& opts) {
    if (r.difficulty.score < 1 || r.difficulty.score > 5) {
        throw ReportError("difficulty.score outside 1..5");
    }

    GateDecision d;
    const CompletenessResult local = completeness_check(t);
    if (r.completeness && r.completeness->complete != local.complete) {
        d.notes.push_back(std::string("agent reported completeness=") +
                          (r.completeness->complete ? "yes" : "no") +
                          " but the local check says " + (local.complete ? "yes" : "no") +
                          "; local verdict wins");
    }

    std::vector<std::string> feedback_parts;
    if (!local.complete) {
        d.reasons.push_back(codes::kIncomplete);
        std::string part = "completeness: missing objects:";
        for (const auto& m : local.missing_objects) part += " '" + m + "'";
        if (r.completeness && !r.completeness->reason.empty()) {
            part += " (" + r.completeness->reason + ")";
        }
        feedback_parts.push_back(std::move(part));
    }
    if (r.simulatability.difficulty == SimDifficulty::impossible) {
        d.reasons.push_back(codes::kNotSimulatable);
        feedback_parts.push_back("simulatability: " + r.simulatability.reason);
    }
    const bool infeasible =
        r.solution_feasibility.level == Feasibility::not_feasible ||
        (opts.strict_feasibility &&
         r.solution_feasibility.level == Feasibility::kind_of_feasible);
    if (infeasible) {
        d.reasons.push_back(codes::kNotFeasible);
        feedback_parts.push_back("feasibility: " + r.solution_feasibility.reason);
    }
    if (!r.solution_efficiency.efficient) {
        d.reasons.push_back(codes::kBypassExists);
        feedback_parts.push_back("efficiency: " + r.solution_efficiency.bypass_solution);
    }

    if (!d.reasons.empty()) {
        d.verdict = Verdict::rejected;
        std::ostringstream fb;
        for (std::size_t i = 0; i < feedback_parts.size(); ++i) {
            if (i) fb << "\n";
            fb << feedback_parts[i];
        }
        d.feedback = fb.str();
        return d;
    }

    d.verdict = Verdict::accepted;
    d.operational_difficulty = r.difficulty.score;
    if (r.solution_feasibility.level == Feasibility::kind_of_feasible) {
        d.reasons.push_back(codes::kSoftFeasibility);
    }
    return d;
}

std::string LocalIndexResolver::normalize(const std::string& phrase) {
    std::string out;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        if (word != "a" && word != "an" && word != "the") {
            if (!out.empty()) out.push_back(' ');
            out += word;
        }
        word.clear();
    };
    for (const char c : phrase) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::map<std::string, std::string> LocalIndexResolver::load_index(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ResolverError("cannot read asset index at " + path);
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ResolverError("asset index " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ResolverError("asset index must map phrases to asset paths");
    std::map<std::string, std::string> index;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_string()) throw ResolverError("asset index values must be strings");
        index[normalize(key)] = value.get<std::string>();
    }
    return index;
}

std::optional<std::string> LocalIndexResolver::resolve(const schema::ObjectSpec& o) {
    for (const auto& instance : o.potential_instances) {
        const auto it = index_.find(normalize(instance));
        if (it != index_.end()) return it->second;
    }
    if (mode_ == RemoteMode::deny_all) return std::nullopt;
    // deterministic synthetic id standing in for a remote asset store
    const std::string basis =
        o.potential_instances.empty() ? o.object_name : o.potential_instances.front();
    std::string slug;
    for (const char c : normalize(basis)) slug.push_back(c == ' ' ? '_' : c);
    return "assets/mock/" + slug + ".glb";
}

schema::TaskSpec resolve_assets(const schema::TaskSpec& t, const VerificationReport& r,
                                AssetResolver& resolver, GateDecision& decision) {
    schema::TaskSpec merged = t;

    for (const auto& update : r.updated_object_list) {
        auto it = std::find_if(merged.object_list.begin(), merged.object_list.end(),
                               [&](const schema::ObjectSpec& o) {
                                   return o.object_name == update.object_name;
                               });
        if (it == merged.object_list.end()) {
            throw ReportError("updated_object_list names unknown object \"" +
                              update.object_name + "\"");
        }
        if (update.use_primitive) it->use_primitive = update.use_primitive;
        if (update.asset_id) it->asset_id = update.asset_id;
    }

    std::vector<std::string> unresolved;
    for (auto& o : merged.object_list) {
        if (o.use_primitive || o.asset_id) continue;
        if (const auto id = resolver.resolve(o)) {
            o.asset_id = *id;
        } else {
            unresolved.push_back(o.object_name);
        }
    }

    if (!unresolved.empty()) {
        decision.verdict = Verdict::rejected;
        decision.operational_difficulty.reset();
        decision.reasons.push_back(codes::kAssetUnavailable);
        std::string note = "no asset found for:";
        for (const auto& name : unresolved) note += " '" + name + "'";
        decision.feedback = decision.feedback.empty() ? note : decision.feedback + "\n" + note;
    }
    return merged;
}

}  // namespace witforge::verify
