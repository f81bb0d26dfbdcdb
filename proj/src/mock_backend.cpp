#include <algorithm>
#include <cmath>
#include <set>

#include "witforge/backends.hpp"
#include "witforge/verification.hpp"

namespace witforge::agents {

namespace {

using schema::ObjectSpec;
using schema::TaskSpec;

ObjectSpec make_object(std::string name, std::vector<std::string> appearance,
                       std::vector<std::string> functional,
                       std::vector<std::string> instances) {
    ObjectSpec o;
    o.object_name = std::move(name);
    o.appearance_attribute = std::move(appearance);
    o.functional_attribute = std::move(functional);
    o.potential_instances = std::move(instances);
    return o;
}

json seed_retrieve_cube() {
    TaskSpec t;
    t.task_name = "retrieve cube";
    t.object_list = {
        make_object("cube", {"small", "red"}, {"rigid", "graspable"},
                    {"wooden cube", "toy block", "dice"}),
        make_object("narrow container", {"tall", "thin", "opening too narrow for gripper"},
                    {"rigid", "movable", "stable"},
                    {"high thin cup", "bottle with narrow mouth", "tall glass vase"}),
        make_object("target_area", {"flat", "green", "square"}, {"visual marker"},
                    {"green mat", "green paper sheet", "green tray"}),
    };
    t.initial_scene_setup =
        "Place the 'narrow container' upright with the 'cube' resting inside it, and lay the "
        "'target_area' flat on the table to the right of the 'narrow container'.";
    t.task_instruction = "Retrieve the cube from the container and place it on the green target area.";
    t.task_success_criteria =
        "the 'cube' is on the table surface, the overlap between the 'cube' and the "
        "'target_area' is greater than 50 percent, and the 'cube' is still";
    t.potential_solution =
        "Grasp the 'narrow container', tilt it to pour the 'cube' out onto the table, then pick "
        "the 'cube' and place it on the 'target_area'.";
    t.task_description =
        "The opening of the 'narrow container' is too narrow for a parallel gripper, so the "
        "'cube' cannot be grasped directly; pouring exploits the mobility of the 'narrow "
        "container' before a standard pick onto the 'target_area'.";
    t.category = schema::Category::geometry;
    return schema::to_json(t);
}

json seed_align_blocks() {
    TaskSpec t;
    t.task_name = "align blocks";
    t.object_list = {
        make_object("block 1", {"small", "cubic"}, {"rigid"}, {"wooden cube", "toy block"}),
        make_object("block 2", {"small", "cubic"}, {"rigid"}, {"wooden cube", "toy block"}),
        make_object("block 3", {"small", "cubic"}, {"rigid"}, {"wooden cube", "toy block"}),
        make_object("straightedge tool", {"long", "flat edge"}, {"rigid", "movable"},
                    {"ruler", "level bar", "wooden slat"}),
        make_object("alignment zone", {"long", "narrow", "green"}, {"visual marker"},
                    {"green tape strip", "painted line", "green mat"}),
    };
    t.initial_scene_setup =
        "Scatter 'block 1', 'block 2' and 'block 3' around the middle of the table, lay the "
        "'straightedge tool' within reach, and mark the 'alignment zone' as a straight strip.";
    t.task_instruction = "Align the three cubes perfectly in a straight line.";
    t.task_success_criteria =
        "each of 'block 1', 'block 2' and 'block 3' overlaps the 'alignment zone' by more than "
        "50 percent, and every block is still";
    t.potential_solution =
        "Press the 'straightedge tool' flat against 'block 1', 'block 2' and 'block 3' and "
        "sweep them together so that the shared edge forces them into the 'alignment zone'.";
    t.task_description =
        "Aligning cube by cube is slow and error-prone; the edge of the 'straightedge tool' "
        "acts as a one-dimensional constraint that aligns every block it touches at once.";
    t.category = schema::Category::assembly;
    return schema::to_json(t);
}

json seed_hold_cup() {
    TaskSpec t;
    t.task_name = "hold cup";
    t.object_list = {
        make_object("cup", {"short", "cylindrical"}, {"rigid", "low friction base"},
                    {"ceramic mug", "plastic cup", "steel tumbler"}),
        make_object("slope board", {"flat", "inclined"}, {"rigid", "smooth", "fixed"},
                    {"cutting board", "serving tray", "book stand"}),
        make_object("cloth pad", {"thin", "square"}, {"soft", "high friction"},
                    {"dish cloth", "felt coaster", "napkin"}),
        make_object("target_area", {"flat", "green"}, {"visual marker"},
                    {"green mat", "green paper sheet"}),
    };
    t.initial_scene_setup =
        "Fix the 'slope board' as a gentle incline, mark the 'target_area' on its face, fold "
        "the 'cloth pad' flat beside it, and stand the 'cup' upright within reach.";
    t.task_instruction =
        "Put the cup on the green target area on the slope without sliding down.";
    t.task_success_criteria =
        "the overlap between the 'cup' and the 'target_area' is greater than 50 percent, and "
        "the 'cup' is still";
    t.potential_solution =
        "Lay the 'cloth pad' over the 'target_area' on the 'slope board', then place the 'cup' "
        "onto the 'cloth pad'.";
    t.task_description =
        "The rigid 'cup' slides off the smooth 'slope board'; the 'cloth pad' supplies the "
        "missing friction so the 'cup' can rest on the 'target_area'.";
    t.category = schema::Category::material;
    return schema::to_json(t);
}

bool text_contains(const std::string& haystack, const std::string& needle) {
    auto lower = [](std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    };
    return lower(haystack).find(lower(needle)) != std::string::npos;
}

bool task_mentions(const TaskSpec& t, const std::vector<std::string>& needles) {
    auto check = [&](const std::string& text) {
        return std::any_of(needles.begin(), needles.end(),
                           [&](const std::string& n) { return text_contains(text, n); });
    };
    for (const auto& o : t.object_list) {
        for (const auto& a : o.appearance_attribute) {
            if (check(a)) return true;
        }
        for (const auto& f : o.functional_attribute) {
            if (check(f)) return true;
        }
        for (const auto& i : o.potential_instances) {
            if (check(i)) return true;
        }
        if (check(o.object_name)) return true;
    }
    return check(t.initial_scene_setup);
}

bool has_fixed_object(const TaskSpec& t) {
    for (const auto& o : t.object_list) {
        for (const auto& f : o.functional_attribute) {
            if (text_contains(f, "fixed")) return true;
        }
    }
    return false;
}

std::string slugify(const std::string& phrase) {
    std::string slug;
    for (const char c : verify::LocalIndexResolver::normalize(phrase)) {
        slug.push_back(c == ' ' ? '_' : c);
    }
    return slug;
}

// --- verifier rule table ----------------------------------------------------

json mock_verify(const json& payload) {
    const TaskSpec t = schema::parse_task_json(payload);

    json report = json::object();

    const auto completeness = verify::completeness_check(t);
    report["completeness"] = {
        {"completeness", completeness.complete ? "yes" : "no"},
        {"missing_objects", completeness.missing_objects},
        {"reason", completeness.complete
                       ? "All mentioned objects are in the object_list."
                       : "Some quoted objects are not in the object_list."}};

    std::string sim = "easy";
    std::string sim_reason = "Standard rigid-body interactions with simple geometries.";
    if (task_mentions(t, {"magnet", "aerodynamic", "thermo", "sticky", "balloon"})) {
        sim = "impossible";
        sim_reason = "The task depends on physics outside the simulator's capabilities.";
    } else if (task_mentions(t, {"water", "liquid", "fluid", "sand", "granular", "soft", "cloth",
                                 "dough", "foam", "deformable"})) {
        sim = "hard";
        sim_reason = "Soft bodies, liquids or granular media make simulation contact-rich.";
    }
    report["simulatability"] = {
        {"difficulty", sim}, {"challenging_objects", json::array()}, {"reason", sim_reason}};

    std::string feasibility = "very feasible";
    std::string not_feasible_step;
    std::string feas_reason = "Every step is reachable for a dual-arm parallel gripper.";
    if (text_contains(t.potential_solution, "break") ||
        text_contains(t.potential_solution, "tear") ||
        text_contains(t.potential_solution, "drill") ||
        text_contains(t.potential_solution, "shatter")) {
        feasibility = "not feasible";
        not_feasible_step = "The solution requires breaking or permanently deforming an object.";
        feas_reason = "Destructive operations cannot be executed by the robot.";
    } else if (text_contains(t.potential_solution, "throw") ||
               text_contains(t.potential_solution, "catch") ||
               text_contains(t.potential_solution, "toss") ||
               text_contains(t.potential_solution, "flick") ||
               text_contains(t.potential_solution, " hit ")) {
        feasibility = "kind of feasible";
        feas_reason = "Highly dynamic control makes the solution risky but possible.";
    }
    report["solution_feasibility"] = {{"feasibility", feasibility},
                                      {"not_feasible_step", not_feasible_step},
                                      {"reason", feas_reason}};

    const bool bypass = text_contains(t.task_description, "a single pick-and-place suffices") ||
                        t.potential_solution.rfind("Simply", 0) == 0;
    report["solution_efficiency"] = {
        {"efficiency", bypass ? "no" : "yes"},
        {"bypass_solution", bypass ? "Pick the goal object up directly and place it." : ""},
        {"bypass_objects", json::array()}};

    int score = 1 + static_cast<int>(t.object_list.size() > 0 ? (t.object_list.size() - 1) / 2 : 0);
    if (has_fixed_object(t)) ++score;
    if (sim == "hard") ++score;
    score = std::clamp(score, 1, 5);
    report["difficulty"] = {{"score", std::to_string(score)},
                            {"reason", "Scored from object count, fixtures and media."}};

    // assignments use the wire alias exactly as real sessions produce it
    json updates = json::array();
    for (const auto& o : t.object_list) {
        json u = {{"object_name", o.object_name}, {"use_primitive", nullptr}, {"assed_id", nullptr}};
        if (text_contains(o.object_name, "cube") || text_contains(o.object_name, "block")) {
            u["use_primitive"] = "cube";
        } else {
            const std::string basis =
                o.potential_instances.empty() ? o.object_name : o.potential_instances.front();
            u["assed_id"] = "assets/mock/" + slugify(basis) + ".glb";
        }
        updates.push_back(std::move(u));
    }
    report["updated_object_list"] = std::move(updates);
    return report;
}

// --- mutator transforms -----------------------------------------------------

const std::vector<std::pair<std::string, std::vector<std::string>>>& pivot_bank() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> bank{
        {"long reach spoon", {"long handle", "small head"}},
        {"wooden wedge", {"triangular", "sturdy"}},
        {"stiff hook rod", {"long", "hooked tip"}},
        {"flat paddle", {"wide", "thin"}},
    };
    return bank;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& trap_bank() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> bank{
        {"oversized ladle", {"head too large for any opening"}},
        {"foam lever", {"soft", "bends under load"}},
        {"short tong", {"reach too short for the scene"}},
        {"paper ramp", {"soft", "collapses under weight"}},
    };
    return bank;
}

const std::vector<std::string>& related_bank() {
    static const std::vector<std::string> bank{"fork", "paper cup", "dish towel", "ceramic plate"};
    return bank;
}

const std::vector<std::string>& unrelated_bank() {
    static const std::vector<std::string> bank{"tv remote", "wrench", "toy car", "stapler"};
    return bank;
}

bool name_taken(const TaskSpec& t, const std::string& name) {
    return std::any_of(t.object_list.begin(), t.object_list.end(),
                       [&](const ObjectSpec& o) { return o.object_name == name; });
}

std::string fresh_name(const TaskSpec& t, const std::vector<std::string>& candidates,
                       std::size_t start) {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::string& name = candidates[(start + i) % candidates.size()];
        if (!name_taken(t, name)) return name;
    }
    const std::string base = candidates[start % candidates.size()];
    for (int n = 2;; ++n) {
        const std::string name = base + " " + std::to_string(n);
        if (!name_taken(t, name)) return name;
    }
}

std::set<std::string> criteria_objects(const TaskSpec& t) {
    const auto names = schema::extract_quoted_names(t.task_success_criteria);
    return {names.begin(), names.end()};
}

TaskSpec transform_pivot(const TaskSpec& parent, std::uint64_t seed) {
    TaskSpec out = parent;
    const auto protected_names = criteria_objects(parent);

    // block the primary tool: the first object that is not success-critical
    ObjectSpec* primary = nullptr;
    for (auto& o : out.object_list) {
        if (!protected_names.count(o.object_name)) {
            primary = &o;
            break;
        }
    }
    if (!primary) primary = &out.object_list.front();
    primary->functional_attribute.push_back("fixed to table");
    const std::string primary_name = primary->object_name;  // push_back below reallocates

    const auto& bank = pivot_bank();
    const auto& pick = bank[(seed / 20) % bank.size()];
    std::vector<std::string> names;
    for (const auto& [name, attrs] : bank) names.push_back(name);
    ObjectSpec tool = make_object(fresh_name(out, names, (seed / 20) % names.size()), pick.second,
                                  {"rigid", "movable"}, {pick.first});
    const std::string tool_name = tool.object_name;
    out.object_list.push_back(std::move(tool));

    out.initial_scene_setup += " The '" + primary_name + "' is fixed to the table; the '" +
                               tool_name + "' lies within reach.";
    out.potential_solution = "Use the '" + tool_name + "' to work around the immobilized '" +
                             primary_name + "' and complete the original goal.";
    out.task_description += " The '" + primary_name + "' can no longer move, so the '" +
                            tool_name + "' enables an alternative strategy.";
    out.difficulty.reset();
    return out;
}

TaskSpec transform_additive(const TaskSpec& parent, const std::string& kind, std::uint64_t seed) {
    TaskSpec out = parent;
    if (kind == "trap") {
        const auto& bank = trap_bank();
        const auto& pick = bank[(seed / 20) % bank.size()];
        std::vector<std::string> names;
        for (const auto& [name, attrs] : bank) names.push_back(name);
        ObjectSpec obj = make_object(fresh_name(out, names, (seed / 20) % names.size()),
                                     {"looks useful for the task"}, pick.second, {pick.first});
        if (seed % 40 < 20) obj.functional_attribute.push_back("fixed to table");
        const std::string name = obj.object_name;
        out.object_list.push_back(std::move(obj));
        out.initial_scene_setup += " The '" + name + "' rests near the other objects.";
        out.task_description +=
            " The '" + name + "' appears helpful but its attributes make it ineffective.";
    } else {
        const auto& bank = kind == "related" ? related_bank() : unrelated_bank();
        const std::size_t count = 1 + (seed / 7) % 2;
        for (std::size_t i = 0; i < count; ++i) {
            ObjectSpec obj = make_object(fresh_name(out, bank, (seed / 20 + i) % bank.size()),
                                         {"ordinary"}, {"rigid"}, {bank[(seed / 20 + i) % bank.size()]});
            const std::string name = obj.object_name;
            out.object_list.push_back(std::move(obj));
            out.initial_scene_setup += " The '" + name + "' sits off to one side.";
        }
    }
    out.difficulty.reset();
    return out;
}

TaskSpec apply_transform(const TaskSpec& parent, const std::string& type, std::uint64_t seed) {
    if (type == "pivot") return transform_pivot(parent, seed);
    return transform_additive(parent, type, seed);
}

void inject_contract_flaw(TaskSpec& candidate, const TaskSpec& parent, const std::string& type) {
    if (type == "pivot") {
        // rename a success-critical object consistently everywhere
        const auto protected_names = criteria_objects(parent);
        if (protected_names.empty()) return;
        const std::string victim = *protected_names.begin();
        const std::string renamed = victim + " unit";
        auto rename_in = [&](std::string& text) {
            const std::string quoted = "'" + victim + "'";
            const std::string replacement = "'" + renamed + "'";
            std::size_t at = 0;
            while ((at = text.find(quoted, at)) != std::string::npos) {
                text.replace(at, quoted.size(), replacement);
                at += replacement.size();
            }
        };
        for (auto& o : candidate.object_list) {
            if (o.object_name == victim) o.object_name = renamed;
        }
        rename_in(candidate.initial_scene_setup);
        rename_in(candidate.task_success_criteria);
        rename_in(candidate.potential_solution);
        rename_in(candidate.task_description);
    } else {
        // silently drop the last inherited object, scrubbing every quoted
        // mention so the deletion slips past the completeness check
        if (candidate.object_list.size() < 2 || parent.object_list.empty()) return;
        const std::size_t victim_index = parent.object_list.size() - 1;
        if (victim_index >= candidate.object_list.size()) return;
        const std::string victim = candidate.object_list[victim_index].object_name;
        candidate.object_list.erase(candidate.object_list.begin() +
                                    static_cast<std::ptrdiff_t>(victim_index));
        const std::string stand_in = candidate.object_list.front().object_name;
        auto scrub = [&](std::string& text) {
            const std::string quoted = "'" + victim + "'";
            const std::string replacement = "'" + stand_in + "'";
            std::size_t at = 0;
            while ((at = text.find(quoted, at)) != std::string::npos) {
                text.replace(at, quoted.size(), replacement);
                at += replacement.size();
            }
        };
        scrub(candidate.initial_scene_setup);
        scrub(candidate.task_success_criteria);
        scrub(candidate.potential_solution);
        scrub(candidate.task_description);
    }
}

json mock_mutate(const json& payload, std::uint64_t seed, const MockBackend::Options& options) {
    const TaskSpec parent = schema::parse_task_json(payload.at("task"));
    const std::string type = payload.at("mutation_type").get<std::string>();

    if (payload.contains("previous_attempt") && payload["previous_attempt"].is_object()) {
        TaskSpec previous = schema::parse_task_json(payload["previous_attempt"]);
        const std::string marker = " Beside it sits the 'phantom widget'.";
        const std::size_t at = previous.initial_scene_setup.find(marker);
        if (at != std::string::npos) {
            previous.initial_scene_setup.erase(at, marker.size());  // transient flaw: repaired
        }
        // stubborn flaws stay in place; the candidate is otherwise final
        return schema::to_json(previous);
    }

    TaskSpec candidate = apply_transform(parent, type, seed);
    if (options.adversarial) {
        inject_contract_flaw(candidate, parent, type);
        return schema::to_json(candidate);
    }

    const int roll = static_cast<int>(seed % 20);
    const int stubborn_end = options.stubborn_rolls;
    const int contract_end = stubborn_end + options.contract_rolls;
    const int transient_end = contract_end + options.transient_rolls;
    if (roll < stubborn_end) {
        candidate.potential_solution =
            "Break the '" + candidate.object_list.back().object_name +
            "' apart to reach the goal directly.";
    } else if (roll < contract_end) {
        inject_contract_flaw(candidate, parent, type);
    } else if (roll < transient_end) {
        candidate.initial_scene_setup += " Beside it sits the 'phantom widget'.";
    }
    return schema::to_json(candidate);
}

// --- scene generator ----------------------------------------------------------

bool is_container_name(const std::string& name) {
    for (const char* key : {"container", "cup", "jar", "vase", "bottle", "tank", "bowl", "basket",
                            "mug", "pot"}) {
        if (text_contains(name, key)) return true;
    }
    return false;
}

json mock_scene(const json& payload, const MockBackend::Options& options) {
    const TaskSpec t = schema::parse_task_json(payload.at("task"));
    const int attempt = payload.value("attempt", 1);
    const auto& ws = options.workspace;

    scene::SceneConfig config;
    config.workspace = ws;

    const double x0 = 0.35 + 0.002 * (attempt - 1);
    const std::vector<double> xs{x0, x0 + 0.106, x0 + 0.212, x0 + 0.318};
    const std::vector<double> ys{-0.13, 0.0, 0.13};

    std::string container_name;
    for (const auto& o : t.object_list) {
        if (is_container_name(o.object_name)) {
            container_name = o.object_name;
            break;
        }
    }

    auto attr_text = [](const ObjectSpec& o) {
        std::string all = o.object_name;
        for (const auto& a : o.appearance_attribute) all += " " + a;
        for (const auto& f : o.functional_attribute) all += " " + f;
        for (const auto& i : o.potential_instances) all += " " + i;
        return all;
    };

    std::size_t cell = 0;
    for (const auto& o : t.object_list) {
        scene::EntityPlacement e;
        e.name = o.object_name;
        const std::string all = attr_text(o);

        const bool fluid = text_contains(all, "water") || text_contains(all, "liquid");
        const bool granular = text_contains(all, "sand") || text_contains(all, "granular") ||
                              text_contains(all, "screw");
        const bool soft = text_contains(all, "cloth") || text_contains(all, "dough") ||
                          text_contains(all, "foam") || text_contains(all, "soft");

        if (o.use_primitive) {
            e.source = {scene::SourceRef::Kind::primitive, *o.use_primitive};
        } else if (o.asset_id) {
            e.source = {scene::SourceRef::Kind::asset, *o.asset_id};
        } else {
            e.source = {scene::SourceRef::Kind::primitive, "box"};
        }

        if (is_container_name(o.object_name)) {
            e.size = {0.08, 0.08, 0.12};
        } else if (text_contains(o.object_name, "target") || text_contains(o.object_name, "zone") ||
                   text_contains(o.object_name, "area") || text_contains(o.object_name, "mat")) {
            e.size = {0.09, 0.09, 0.002};
        } else if (text_contains(o.object_name, "board") || text_contains(o.object_name, "tool") ||
                   text_contains(o.object_name, "rod") || text_contains(o.object_name, "spoon") ||
                   text_contains(o.object_name, "ladle") || text_contains(o.object_name, "lever")) {
            e.size = {0.09, 0.03, 0.02};
        } else {
            e.size = {0.05, 0.05, 0.05};
        }

        if (fluid || granular || soft) {
            e.material_kind = fluid ? scene::MaterialKind::particle_fluid
                                    : granular ? scene::MaterialKind::particle_granular
                                               : scene::MaterialKind::particle_soft;
        }

        for (const auto& f : o.functional_attribute) {
            if (text_contains(f, "fixed")) e.physical.fixed = true;
        }
        const bool out_of_reach = text_contains(all, "out of reach");

        if ((fluid || granular) && !container_name.empty() && o.object_name != container_name) {
            // co-locate inside the container instead of occupying a cell
            e.size = {0.05, 0.05, 0.05};
            e.containing_volume = container_name;
            // position resolved below once the container is placed
            e.position = {0, 0, 0};
            config.entities.push_back(std::move(e));
            continue;
        }

        double x, y;
        if (out_of_reach) {
            x = 0.9;
            y = 0.0;
            e.out_of_reach_intended = true;
        } else if (cell < xs.size() * ys.size()) {
            x = xs[cell % xs.size()];
            y = ys[cell / xs.size()];
            ++cell;
        } else {
            // grid exhausted; overflow placements land out of reach unflagged
            x = 0.9;
            y = 0.3;
        }
        const double half_z = e.size.z * e.scale.z / 2.0;
        const double z =
            e.size.z <= 0.003 ? ws.table_height + half_z + 0.0005 : ws.table_height + half_z;
        e.position = {x, y, z};
        if (soft && (fluid || granular) == false && e.material_kind != scene::MaterialKind::rigid) {
            // free-standing soft pads carry explicit containment bounds
            e.containing_bounds = {{Vec3{x - 0.1, y - 0.1, ws.table_height - 0.01},
                                    Vec3{x + 0.1, y + 0.1, ws.table_height + 0.2}}};
        }
        config.entities.push_back(std::move(e));
    }

    // resolve particle positions inside their containers
    for (auto& e : config.entities) {
        if (!e.containing_volume) continue;
        for (const auto& host : config.entities) {
            if (host.name != *e.containing_volume) continue;
            const double half_z = e.size.z / 2.0;
            e.position = {host.position.x, host.position.y,
                          ws.table_height + half_z + 0.005};
            break;
        }
    }

    json out = config.to_json();
    out.erase("workspace");  // the pipeline validates against its own workspace
    return out;
}

// --- metric generator ---------------------------------------------------------

std::string metric_for(const TaskSpec& t) {
    const auto names = schema::extract_quoted_names(t.task_success_criteria);
    const std::set<std::string> quoted(names.begin(), names.end());

    if (quoted.count("cube") && quoted.count("target_area")) {
        return "metric {\n"
               "  success: overlap_frac(\"cube\", \"target_area\") > 0.5 and vel_norm(\"cube\") < 0.01;\n"
               "  milestone near_target weight 1: dist(\"cube\", \"target_area\") < 0.3;\n"
               "  milestone over_target weight 1: overlap_frac(\"cube\", \"target_area\") > 0.5;\n"
               "}\n";
    }
    if (quoted.count("block 1") && quoted.count("alignment zone")) {
        return "metric {\n"
               "  success: overlap_frac(\"block 1\", \"alignment zone\") > 0.5 and "
               "overlap_frac(\"block 2\", \"alignment zone\") > 0.5 and "
               "overlap_frac(\"block 3\", \"alignment zone\") > 0.5 and "
               "still(\"block 1\", 0.01) and still(\"block 2\", 0.01) and still(\"block 3\", 0.01);\n"
               "  milestone first_block weight 1: overlap_frac(\"block 1\", \"alignment zone\") > 0.5;\n"
               "  milestone second_block weight 1: overlap_frac(\"block 2\", \"alignment zone\") > 0.5;\n"
               "  milestone third_block weight 1: overlap_frac(\"block 3\", \"alignment zone\") > 0.5;\n"
               "}\n";
    }
    if (quoted.count("cup") && quoted.count("target_area")) {
        return "metric {\n"
               "  success: overlap_frac(\"cup\", \"target_area\") > 0.5 and still(\"cup\", 0.01);\n"
               "  milestone on_slope weight 1: overlap_frac(\"cup\", \"target_area\") > 0.5;\n"
               "}\n";
    }
    if (names.size() >= 2) {
        return "metric {\n  success: overlap_frac(\"" + names[0] + "\", \"" + names[1] +
               "\") > 0.5 and still(\"" + names[0] + "\", 0.01);\n}\n";
    }
    if (names.size() == 1) {
        return "metric {\n  success: on_table(\"" + names[0] + "\") and still(\"" + names[0] +
               "\", 0.01);\n}\n";
    }
    return "metric {\n  success: true;\n}\n";
}

std::string fence(const char* tag, const std::string& body) {
    return std::string("```") + tag + "\n" + body + (body.ends_with('\n') ? "" : "\n") + "```";
}

}  // namespace

AgentReply MockBackend::invoke_impl(const AgentRequest& req) {
    json payload = json::object();
    if (req.messages.size() > 1) {
        payload = json::parse(req.messages.back().content, nullptr, false);
        if (payload.is_discarded()) {
            throw PayloadError("mock backend expects a JSON user message");
        }
    }
    const std::uint64_t seed = req.seed.value_or(0);

    std::string text;
    switch (req.role) {
        case AgentRole::seed_generator: {
            const int wanted = payload.is_object() ? payload.value("num_tasks", 3) : 3;
            json tasks = json::array({seed_retrieve_cube(), seed_align_blocks(), seed_hold_cup()});
            while (static_cast<int>(tasks.size()) > wanted) tasks.erase(tasks.size() - 1);
            text = "Here are the generated tasks.\n" + fence("json", tasks.dump(2));
            break;
        }
        case AgentRole::verifier:
            text = fence("json", mock_verify(payload).dump(2));
            break;
        case AgentRole::mutator:
            text = fence("json", mock_mutate(payload, seed, options_).dump(2));
            break;
        case AgentRole::scene_generator:
            text = "Scene layout follows.\n" + fence("json", mock_scene(payload, options_).dump(2));
            break;
        case AgentRole::metric_generator: {
            const TaskSpec t = schema::parse_task_json(payload.at("task"));
            text = fence("metric", metric_for(t));
            break;
        }
    }

    AgentReply reply;
    reply.raw_text = std::move(text);
    reply.extracted_json = extract_json(reply.raw_text);
    reply.token_usage = TokenUsage{estimate_tokens(req), reply.raw_text.size() / 4 + 1};
    reply.latency = std::chrono::milliseconds(0);
    return reply;
}

}  // namespace witforge::agents
