#include <charconv>
#include <map>

#include "witforge/agents.hpp"

namespace witforge::agents {

namespace {

// --- role system templates -------------------------------------------------
// Placeholders ({{TABLE_DIMS}}, {{TABLE_BOUNDS}}, {{REACHABLE_REGION}},
// {{FORBIDDEN_REGION_1}}, {{FORBIDDEN_REGION_2}}) are filled from the
// configured workspace; everything else is fixed prompt text.

const std::string kSeedTemplate = R"PROMPT(You are a Robotics Task Designer generating complex, skill-based challenges for a dual-arm robot equipped with parallel grippers (the workspace is a {{TABLE_DIMS}} table surface, with a bounds of {{TABLE_BOUNDS}}). Each task must be returned as a JSON object, and all the tasks must be contained within a single JSON array.

TASK FORMAT:
```json
[
  {
    "task_name": "a concise and meaningful name of the task",
    "object_list": [
      {
        "object_name": "abstract functional name of the object (e.g., 'straightedge tool' instead of 'ruler', 'high-friction pad' instead of 'rubber mat')",
        "appearance_attribute": [
          "an array of required appearance attributes of the object, including its shape, size, color, high or short, fat or slim, ..."
        ],
        "functional_attribute": [
          "an array of required functional attributes of the object, including its material, density, friction, movability, ..."
        ],
        "potential_instances": [
          "at least 3 daily object names to fit the object with attributes required",
          "...",
          "..."
        ],
        "use_primitive": null,
        "asset_id": null
      }
      // ... continue for all necessary objects
    ],
    "initial_scene_setup": "the initial scene setup to form the task, describe the required position and/or relationship of all objects in the object_list",
    "task_instruction": "the goal of the task without hinting at the solution",
    "task_success_criteria": "the signals to show the task is completed, easy to quantalize, no subjectives,",
    "potential_solution": "how the task should be solved in the easiest way with the current objects provided",
    "task_description": "describe the task in detail, including the goal, the challenge, and why the potential_solution is valid and efficient for the task."
  }
  // ... continue for more unique tasks
]
```

CONSTRAINTS FOR OBJECTS:
 - DO NOT include articulated objects in the object_list.
 - DO NOT include objects involving aerodynamics, magnetism, thermodynamics, sticky materials or unintended flaws (e.g., unintended holes, scratches, wear, or micro-grooves).
 - The object must be a very common daily item (e.g., mug, hammer, stapler, apple) for which 3D assets are easily found online.
 - DO NOT include the words 'a', 'an', or 'the' in the 'object_name' of the object.
 - Use ABSTRACT FUNCTIONAL names for 'object_name' that describe the object's role in the task, not specific instances. For example: use "straightedge tool" instead of "ruler", "high-friction pad" instead of "rubber mat", "narrow opening container" instead of "bottle", "flat retrieval target" instead of "bank card". List specific instances in 'potential_instances'.
 - An object in the 'object_list' represents a single object (except for liquid and granularity). If there are multiple objects of the same category, write them separately in the 'object_list' (e.g., "boundary block 1", "boundary block 2").
 - DONOT use mechanism names like "inclined plane" or "gap" in the object_list. Instead, DO list the physical objects that create these mechanisms (e.g., a "support block" and a "ramp board" forming the inclined plane).
 - An object is of a single material type. Instead of adding "a cup of water", add a "cup" and a "water" separately and specify the 'water' fills more than half of the 'cup' in the 'initial_scene_setup'.
 - Only list necessary attributes of the object that is important for the task, not all the appearance or functional attributes. Consider specify attributes to realize ideal constraints, like "out of reachability" to avoid direct manipulation.
 - The 'use_primitive' and 'asset_id' of objects will always be null.

CONSTRAINTS FOR OTHERS:
 - DONOT generate tasks that require breaking, permanently deforming (except for soft, intended-to-be-deformed objects like "dough"), or damaging any shape.
 - Ensure all the objects mentioned in the 'initial_scene_setup', 'task_instruction', 'task_success_criteria' and 'potential_solution' are in the 'object_list', except the table and the robot.
 - Ensure the 'initial_scene_setup' and 'object_list' are perfectly aligned.
 - Quote 'object_name' whenever it appears in the 'initial_scene_setup', 'task_success_criteria', 'potenrial_solution' and 'task_description'.
 - Ensure the 'task_instruction' is a single, concise sentence in natural language. DO NOT hint at the solution, quote 'object_name', or use techinical jargon like "target position". Instead, use grounded descriptions like "the green target area".
 - Define the 'task_success_criteria' based on visible, quantifiable physical signals or events that are easy to verify. Descriptions must be strictly quantified rather than qualitative, for example: instead of "the 'cube' is moved to the 'target area'," use "the 'cube' is on the table surface, and the overlap between the 'cube' and the 'target area' is greater than 50

IMPORTANT:
 - DO NOT assume any verbal constraints like "without directly grasping", "without touching the table surface". Use physics grounded constraints like "out of reachability" or "larger than gripper's open".
 - DO NOT generate over-simple tasks that can be solved by a single pick-and-place.
 - Note that parallel grippers are rigid (no compliance) and the friction coefficiency of gripper fingers is small. Operating sharp or thin objects, especially those lying flat on a table, is difficult.
 - Note that it is non-trivial for a robot arm to perform rotations or follow circular/arched trajectories.)PROMPT";

const std::string kVerifierTemplate = R"PROMPT(You are a Robotic Simulation Expert. Given manipulation tasks for a dual-arm robot equipped with parallel grippers (the workspace is a {{TABLE_DIMS}} table surface, with a bounds of {{TABLE_BOUNDS}}), your role is to audit input tasks for Completeness, Simulatability, Feasibility, and Solution Efficiency. Return ONLY a JSON object in the following structure:

INPUT FORMAT:
...

OUTPUT FORMAT:
```json
{
  "completeness": {
    "completeness": "yes"/"no",
    "missing_objects": ["object_name_1", ...],
    "reason": "..."
  },
  "simulatability": {
    "difficulty": "easy"/"hard"/"impossible",
    "challenging_objects": ["object_name_1", ...],
    "reason": "..."
  },
  "solution_feasibility": {
    "feasibility": "very feasible"/"kind of feasible"/"not feasible",
    "not_feasible_step": "...",
    "reason": "..."
  },
  "solution_efficiency": {
    "efficiency": "yes"/"no",
    "bypass_solution": "...",
    "bypass_objects": ["object_name_1", ...]
  },
  "difficulty": {
    "score": "1-5",
    "reason": "..."
  }
}
```

CRITERIA FOR JUDGING:
1. Completeness:
 - Yes (Complete): All the objects mentioned in the 'initial_scene_setup', 'task_instruction', 'task_success_criteria' and 'potential_solution' are in the 'object_list', except the table and the robot.
 - No (Not Complete): There are missing obejcts mentioned but not in the 'object_list'.
2. Simulatability:
 - Impossible: Tasks involving aerodynamics, magnetism, thermodynamics, sticky materials, abstract objects (e.g. a narrow gap), or geometry with unintended flaws (e.g., unintended holes, scratches, wear, or micro-grooves).
 - Hard: Tasks involving contact-rich rigid-body interactions, soft bodies, liquids (including buoyancy), or components requiring extreme precision (e.g., specific gears or screws).
 - Easy: Standard rigid-body interactions with simple geometries.
3. Solution Feasibility:
 - Not Feasible: Solutions requiring breaking, tearing, or creating permanent defects (e.g., drilling holes) are not feasible. High-complexity multi-object interactions that exceed dual-arm coordination limits are also considered not feasible.
 - Kind of Feasible: Solutions requiring highly precise dynamic control, such as throwing, catching, or hitting.
 - Feasible: Ensure a parallel gripper can physically reach the described grasp points without collision.
 - Note that parallel grippers are rigid (no compliance) and the friction coefficiency of gripper fingers is small. Operating sharp or thin objects, especially those lying flat on a table, is difficult.
 - Note that it is non-trivial for a robot arm to perform rotations or follow circular/arched trajectories.
4. Solution Efficiency (Bypass Check):
 - No (Not Efficient): The task is not efficient only if there is a significantly easier or more efficient solution.
 - Yes (Efficiency): If there is no other way except 'potential_solution' to solve the task, it's efficient. If there are other solutions, but 'potential_solution' is easier for operation (e.g. requiring simple pick-and-place, avoiding bi-arm co-operation, avoiding precise or highly dynamic control) or saving more steps than others (e.g. saving two or more steps to finish), it is considered efficient.
 - Note that parallel grippers are rigid (no compliance) and the friction coefficiency of gripper fingers is small. Operating sharp or thin objects, especially those lying flat on a table, is difficult.
 - Note that it is non-trivial for a robot arm to perform rotations or follow circular/arched trajectories.
5. Difficulty (a score between 1 and 5):
 - Score 1: Tasks can be solved within two steps. Each step involves a single robot arm to operate a single object, and the two robot arms don't need to operate together. The objects used in the 'potential_solution' are common in daily life and easy to operate by a robot arm with a parallel gripper.
 - Score 2: Tasks can be solved within three steps. Each step involves one or two robot arms to operate a single object. The objects used in the 'potential_solution' are common in daily life and easy to operate by a robot arm with a parallel gripper.
 - Score 3: Tasks can be solved within four steps. Each step may involve more precise or complex operations than a simple pick-and-place on a single object, or two robot arms perform simple operations on two different objects at the same time. The objects used in the 'potential_solution' are common in daily life.
 - Score 4: Tasks can be solved within four steps. Some steps rely on previous steps to finally build a system consists of different objects to function together.
 - Score 5: Tasks harder than of score 4. )PROMPT";

const std::string kMutatorTemplate = R"PROMPT(You are a robotic task augmentation expert. You modify task JSONs to adjust difficulty and environment complexity through the following four mutation types.

INPUT FORMAT:
...

MUTATION TYPES:
1. Pivot: Block the current 'potential_solution' by modifying or removing objects in 'object_list', then add new objects to support a new solution.
 - Modify or remove the MINIMAL number of existing objects (usually the primary tool) to block the current solution.
 - For any object mentioned in 'task_success_criteria', it is not removable, and its 'object_name' is not modifiable. Only attributes can be modified.
 - Add the MINIMAL number of new objects to enable a new, alternative solution.
-  Keep all other objects the same to preserve the scene's identity.
2. Trap (ADDITIVE ONLY):
 - Add exactly one object that looks like a potential solution but fails due to wrong attributes (e.g., a "soft" bridge that collapses, a "light" hammer, a screwdriver "fixed on the table").
 - You must NOT modify or remove any original objects in the 'object_list'.
3. Related (ADDITIVE ONLY):
 - Add N objects that belong in the environment (e.g., a fork in a kitchen) but are unnecessary for the solution.
 - You must NOT modify or remove any original objects in the 'object_list'.
4. Unrelated (ADDITIVE ONLY):
 - Add N objects as visual/spatial noise (clutter).
 - You must NOT modify or remove any original objects in the 'object_list'.

IMPORTANT:
 - Always return the full, valid JSON object.
 - Ensure 'object_list' and 'initial_scene_setup' are perfectly synchronized.
 - For ADDITIVE types, the 'object_list' must contain all original objects plus the new ones.
 - For modifications, only attributes and 'potential_instances' are modifiable. If 'potential_instances' is modifed, the 'use_primitive' and 'asset_id' should be set null. Otherwise, the 'object_name', 'use_primitive' and 'asset_id' should remain the same.
 - DO NOT make unnecessary modifications or removal.
 - DO NOT remove or modify objects that are mentioned in the 'task_success_criteria'.

CONSTRAINTS FOR ADDING NEW OBJECTS:
 - DO NOT include the words 'pivot', 'trap', 'related', or 'unrelated' in the 'object_name' of the object.
 - DO NOT include the words 'a', 'an', or 'the' in the 'object_name' of the object.
 - DO NOT add articulated objects in the object_list. DO NOT add objects involving aerodynamics, magnetism, thermodynamics, sticky materials or unintended flaws (e.g., unintended holes, scratches, wear, or micro-grooves).
 - The object must be a very common daily item (e.g., mug, hammer, stapler, apple) for which 3D assets are easily found online.
 - An object in the 'object_list' represents a single object (except for liquid and granularity). If there are multiple objects of the same category, write them separately in the 'object_list'.
 - An object is of a single material type. Instead of adding "a cup of water", add a "cup" and a "water" separately and specify the 'water' fills more than half of the 'cup' in the 'initial_scene_setup'.
 - The 'use_primitive' and 'asset_id' of newly added objects will always be null.)PROMPT";

const std::string kSceneTemplate = R"PROMPT(You're Scene Agent, a highly advanced AI agent that automatically sets up the table-top scene for a dual-arm robot equipped with parallel grippers following a natural language description of the initial scene setup. The workspace is a {{TABLE_DIMS}} table surface, with a bounds of {{TABLE_BOUNDS}}.

Reachable Region: {{REACHABLE_REGION}} All objects must be placed within this primary bounding box unless otherwise specified. This represents the maximum reach of the robot's end-effectors on the planar surface.

Forbidden Region: {{FORBIDDEN_REGION_1}}, {{FORBIDDEN_REGION_2}} Objects must strictly avoid these two areas where the robot arms are currently stationed. If the bounds of the object overlap with these two regions, the robot will be in collision with the robot.

Return ONLY a JSON scene configuration in a fenced ```json block:
```json
{
  "entities": [
    {
      "name": "object_name from the object_list",
      "source": {"kind": "primitive", "primitive": "box"} or {"kind": "asset", "asset_id": "..."},
      "position": [x, y, z],
      "euler": [roll, pitch, yaw],
      "size": [dx, dy, dz],
      "scale": 1.0,
      "material_kind": "rigid" | "particle_fluid" | "particle_granular" | "particle_soft",
      "physical": {"density": 1000.0, "friction": 0.5, "fixed": false},
      "containing_volume": "container object_name (particle kinds only)"
    }
  ],
  "groups": [{"supporter": "...", "supported": "..."}]
}
```

Rules:
- If object in the object list has assigned `use_primitive` or `asset_id`, respect it.
- Use the name provided in the object list as the entity name.
- Make sure the actual size of the objects satisfy the relationship implied in initial scene setup and task description.
- For liquids/granular objects (water, sands) that should be contained in a container object, carefully interpret the volume they should occupy. No particles should be outside of the container.
- Avoid overlapping entities to prevent collisions.
- The center of geometry defines the position of an entity.
- All entities must not be placed in the Forbidden Region which is already occupied by the robot arms, and must be placed within reachable region unless otherwise specified.
- Fixed entity has zero dofs and cannot be controlled.
- The scene is preloaded with entities `table` and `robot`; do not emit them.
- Focus only on the `initial_scene_setup` and `object_list`; do not give away the `potential_solution`.)PROMPT";

const std::string kMetricTemplate = R"PROMPT(You are a Robotic Evaluation Specialist expert in physics-base simulation and spatial reasoning. Your role is to generate a metric program that determines if a specific task has been successfully executed. The task is for a dual-arm robot equipped with parallel grippers (the workspace is a {{TABLE_DIMS}} table surface, with a bounds of {{TABLE_BOUNDS}}).
The input is a JSON-formatted task. You must output a metric program in a fenced ```metric block.

TASK FORMAT:
...

DATA SCHEMA:
The program is evaluated against `objs_info`, the status of all the objects in the `object_list`. The format is:
```json
{
    "object_name_1": {
        "material": "rigid" | "particle",
        "pos": np.array,
    "euler": np.array or null,
        "vel": np.array,
        "bounds": np.array or null,
        "convex_hull_2d": np.array or null,
    },
  "object_name_2": {
    ...
  },
  ...
}
```
For "rigid" objects:
- "pos": the object's 3D position of shape (3,).
- "euler": the object's rotations in degrees of shape (3,).
- "vel": the object's 3D linear velocity of shape (3,).
- "bounds": The AABB bounding box of the object, ((x_min, y_min, z_min), (x_max, y_max, z_max)) of shape (2, 3).
- "convex_hull_2d": The 2D convex hull of the object's vertices projected onto the x-y plane (table surface), of shape (N, 2) where N is the number of vertices in the convex hull. Each vertex is (x, y) coordinates. Prefer using this over "bounds" for spatial checks as it provides more precise geometry.
For "particle" objects (fluid, softbody, granularity):
- "pos": the 3D position of N particles of shape (N, 3).
- "vel": the 3D linear velocity of N particles of shape (N, 3).
- no "euler" or "bounds" provided.

METRIC LANGUAGE:
program   := "metric" "{" "success" ":" expr ";" {milestone} "}"
milestone := "milestone" name "weight" number ":" expr ";"
builtins  : pos(obj), vel_norm(obj), hull(obj), overlap_frac(a, b), on_table(obj),
            min_z(obj), max_z(obj), dist(a, b), contained_frac(obj, region, z_lo, z_hi),
            still(obj, eps), x_of(v), y_of(v), z_of(v)
operators : and, or, not, comparisons (<, <=, >, >=, ==, !=), arithmetic (+, -, *, /)
Object names are double-quoted strings; numbers are decimals (meters, m/s, degrees).

IMPLEMENTATION REQUIREMENTS:
1. Output Convention:
 - success true: the task is completed and succeeds.
 - success false: the task is incomplete and fails.
2. Stick to `task_success_criteria`: Implement the natural language success criteria as the success expression.
3. Spatial precision: When performing spatial checks (e.g., checking if objects are on the table, checking positions, overlaps), prefer using `convex_hull_2d` over `bounds` (AABB) for rigid objects, as `convex_hull_2d` provides more precise geometry representation. hull() already applies that preference.
4. Progress: declare milestones with positive weights for partial credit; progress is their weighted fraction.
5. Default criteria:
 - Only check objects that are involved in the task_success_criteria. For those objects, ensure they do not fall off from the table (excluding 'table' and 'robot' from checks).

OUTPUT FORMAT:
```metric
metric {
  success: ...;
  milestone step_one weight 1: ...;
}
```)PROMPT";

std::string short_num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string region_text(const scene::Region2D& r) {
    return "{\"x_min\": " + short_num(r.x_min) + ", \"x_max\": " + short_num(r.x_max) +
           ", \"y_min\": " + short_num(r.y_min) + ", \"y_max\": " + short_num(r.y_max) + "}";
}

std::string bounds_text(const scene::WorkspaceSpec& ws) {
    const auto& t = ws.table_surface;
    return "{\"x_min\": " + short_num(t.x_min) + ", \"x_max\": " + short_num(t.x_max) +
           ", \"y_min\": " + short_num(t.y_min) + ", \"y_max\": " + short_num(t.y_max) +
           ", \"z_min\": " + short_num(ws.table_height) +
           ", \"z_max\": " + short_num(ws.table_height) + "}";
}

std::string dims_text(const scene::WorkspaceSpec& ws) {
    return short_num(ws.table_surface.x_max - ws.table_surface.x_min) + "m x " +
           short_num(ws.table_surface.y_max - ws.table_surface.y_min) + "m";
}

std::string substitute(const std::string& tmpl, const PromptConfig& config) {
    std::map<std::string, std::string> values{
        {"{{TABLE_DIMS}}", dims_text(config.workspace)},
        {"{{TABLE_BOUNDS}}", bounds_text(config.workspace)},
        {"{{REACHABLE_REGION}}", region_text(config.workspace.reachable)},
    };
    for (std::size_t i = 0; i < config.workspace.forbidden.size(); ++i) {
        values["{{FORBIDDEN_REGION_" + std::to_string(i + 1) + "}}"] =
            region_text(config.workspace.forbidden[i]);
    }

    std::string out = tmpl;
    for (const auto& [key, value] : values) {
        std::size_t at = 0;
        while ((at = out.find(key, at)) != std::string::npos) {
            out.replace(at, key.size(), value);
            at += value.size();
        }
    }
    const auto leftover = out.find("{{");
    if (leftover != std::string::npos) {
        const auto end = out.find("}}", leftover);
        throw TemplateError("unresolved placeholder " +
                            out.substr(leftover, end == std::string::npos
                                                     ? 24
                                                     : end + 2 - leftover));
    }
    return out;
}

void require_object(const json& payload, const char* role) {
    if (!payload.is_object()) {
        throw PayloadError(std::string(role) + ": payload must be a JSON object");
    }
}

void require_task(const json& payload, const char* key, const char* role) {
    if (!payload.contains(key) || !payload[key].is_object() ||
        !payload[key].contains("object_list")) {
        throw PayloadError(std::string(role) + ": payload." + key +
                           " must be a task object with an object_list");
    }
}

void check_payload(AgentRole role, const json& payload) {
    switch (role) {
        case AgentRole::seed_generator:
            require_object(payload, "seed_generator");
            if (payload.contains("num_tasks") &&
                (!payload["num_tasks"].is_number_integer() ||
                 payload["num_tasks"].get<int>() < 1)) {
                throw PayloadError("seed_generator: num_tasks must be a positive integer");
            }
            break;
        case AgentRole::verifier:
            require_object(payload, "verifier");
            if (!payload.contains("object_list")) {
                throw PayloadError("verifier: payload must be the task JSON (with object_list)");
            }
            break;
        case AgentRole::mutator: {
            require_object(payload, "mutator");
            require_task(payload, "task", "mutator");
            const std::string type = payload.value("mutation_type", "");
            if (type != "pivot" && type != "trap" && type != "related" && type != "unrelated") {
                throw PayloadError("mutator: mutation_type must be pivot|trap|related|unrelated");
            }
            break;
        }
        case AgentRole::scene_generator:
            require_object(payload, "scene_generator");
            require_task(payload, "task", "scene_generator");
            break;
        case AgentRole::metric_generator:
            require_object(payload, "metric_generator");
            require_task(payload, "task", "metric_generator");
            break;
    }
}

}  // namespace

const std::string& system_template(AgentRole role) {
    switch (role) {
        case AgentRole::seed_generator: return kSeedTemplate;
        case AgentRole::verifier: return kVerifierTemplate;
        case AgentRole::mutator: return kMutatorTemplate;
        case AgentRole::scene_generator: return kSceneTemplate;
        case AgentRole::metric_generator: return kMetricTemplate;
    }
    return kSeedTemplate;
}

AgentRequest build_prompt(AgentRole role, const json& payload, const PromptConfig& config) {
    check_payload(role, payload);

    AgentRequest req;
    req.role = role;
    req.messages.push_back({Speaker::system, substitute(system_template(role), config)});
    req.messages.push_back({Speaker::user, payload.dump(2)});
    switch (role) {
        case AgentRole::seed_generator:
        case AgentRole::mutator:
        case AgentRole::scene_generator:
            req.temperature = config.generation_temperature;
            break;
        default:
            req.temperature = config.verification_temperature;
            break;
    }
    return req;
}

}  // namespace witforge::agents
