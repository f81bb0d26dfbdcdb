#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "witforge/geometry.hpp"
#include "witforge/vec3.hpp"

namespace witforge {

class SnapshotError : public std::runtime_error {
public:
    explicit SnapshotError(const std::string& what) : std::runtime_error(what) {}
};

/// Recorded simulator state of one object. Rigid objects carry a single
/// pose; particle objects (fluid, granular, soft) carry per-particle rows
/// and have no euler or bounds.
struct ObjectState {
    enum class Material { rigid, particle };

    Material material = Material::rigid;
    std::vector<Vec3> pos;  // one row for rigid, N rows for particle
    std::vector<Vec3> vel;  // same shape as pos
    std::optional<Vec3> euler_deg;                        // rigid only
    std::optional<std::array<Vec3, 2>> bounds;            // AABB (min, max), rigid only
    std::optional<std::vector<geom::Vec2>> convex_hull_2d;  // xy projection, rigid only

    bool is_rigid() const { return material == Material::rigid; }
    Vec3 centroid() const;
    double speed() const;  // |vel| for rigid, max row norm for particle
};

/// Per-object state record keyed by object_name.
struct ObjsSnapshot {
    std::map<std::string, ObjectState> objects;

    const ObjectState* find(const std::string& name) const;
    const ObjectState& at(const std::string& name) const;  // throws SnapshotError

    static ObjsSnapshot from_json(const nlohmann::json& doc);
    static ObjsSnapshot parse(const std::string& text);
    nlohmann::json to_json() const;
};

}  // namespace witforge
