#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "witforge/geometry.hpp"
#include "witforge/schema.hpp"
#include "witforge/snapshot.hpp"
#include "witforge/vec3.hpp"

namespace witforge::scene {

class SceneError : public std::runtime_error {
public:
    explicit SceneError(const std::string& what) : std::runtime_error(what) {}
};

class MissingEntity : public std::runtime_error {
public:
    explicit MissingEntity(const std::string& name)
        : std::runtime_error("snapshot missing entity \"" + name + "\"") {}
};

struct Region2D {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

    bool valid() const { return x_min < x_max && y_min < y_max; }
    bool contains(const Region2D& inner) const;
    geom::Polygon2D polygon() const { return geom::axis_rect(x_min, x_max, y_min, y_max); }

    static Region2D from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    friend bool operator==(const Region2D&, const Region2D&) = default;
};

/// Tabletop geometry the scene prompts hand to every agent: the table
/// surface, the reachable band of the end-effectors, and the two regions
/// occupied by the robot arms.
struct WorkspaceSpec {
    Region2D table_surface;
    double table_height = 0.0;
    Region2D reachable;
    std::vector<Region2D> forbidden;

    static WorkspaceSpec defaults();
    static WorkspaceSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    friend bool operator==(const WorkspaceSpec&, const WorkspaceSpec&) = default;
};

enum class MaterialKind { rigid, particle_fluid, particle_granular, particle_soft };

const char* to_string(MaterialKind k);
std::optional<MaterialKind> material_kind_from_string(const std::string& s);
inline bool is_particle(MaterialKind k) { return k != MaterialKind::rigid; }

struct SourceRef {
    enum class Kind { primitive, asset };
    Kind kind = Kind::primitive;
    std::string id;  // primitive name or asset path

    friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

struct Physical {
    double density = 1000.0;  // kg/m^3
    double friction = 0.5;
    bool fixed = false;

    friend bool operator==(const Physical&, const Physical&) = default;
};

struct EntityPlacement {
    std::string name;
    SourceRef source;
    Vec3 position;                 // center of geometry, meters
    Vec3 euler_deg;                // roll, pitch, yaw in degrees (R = Rz Ry Rx)
    Vec3 size{1.0, 1.0, 1.0};      // local full extents before scale
    Vec3 scale{1.0, 1.0, 1.0};
    MaterialKind material_kind = MaterialKind::rigid;
    Physical physical;
    bool out_of_reach_intended = false;
    std::optional<std::string> containing_volume;           // particle kinds
    std::optional<std::array<Vec3, 2>> containing_bounds;   // alternative to a volume ref

    std::array<Vec3, 8> world_corners() const;
    std::array<Vec3, 2> world_aabb() const;

    friend bool operator==(const EntityPlacement&, const EntityPlacement&) = default;
};

struct SceneConfig {
    WorkspaceSpec workspace;
    std::vector<EntityPlacement> entities;
    std::vector<std::pair<std::string, std::string>> groups;  // (supporter, supported)

    static SceneConfig from_json(const nlohmann::json& j);
    static SceneConfig parse(const std::string& text);
    nlohmann::json to_json() const;

    friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

// Stable scene violation codes.
namespace codes {
inline constexpr const char* kOutOfReachable = "OUT_OF_REACHABLE";
inline constexpr const char* kInForbidden = "IN_FORBIDDEN";
inline constexpr const char* kAabbOverlap = "AABB_OVERLAP";
inline constexpr const char* kUnsupported = "UNSUPPORTED";
inline constexpr const char* kParticlesUncontained = "PARTICLES_UNCONTAINED";
inline constexpr const char* kWorkspaceInvalid = "WORKSPACE_INVALID";
}  // namespace codes

inline constexpr double kOverlapToleranceM = 1e-3;   // AABB penetration allowance
inline constexpr double kSupportToleranceM = 2e-3;   // resting-contact allowance

/// Projection of the scaled, rotated box onto the table plane: convex hull
/// of the eight world-space corners' xy coordinates.
geom::Polygon2D footprint(const EntityPlacement& e);

schema::ValidationOutcome validate_scene(const SceneConfig& s);

inline constexpr double kSettleMoveToleranceM = 5e-3;
inline constexpr double kSettleRotToleranceDeg = 2.0;
inline constexpr double kSettleSpeedTolerance = 1e-3;

/// Static stability proxy over two externally produced snapshots: true iff
/// every rigid entity moved < 5 mm, rotated < 2 deg, and is slower than
/// 1e-3 m/s, and every particle entity's centroid moved < 5 mm.
bool settle_check(const SceneConfig& s, const ObjsSnapshot& before, const ObjsSnapshot& after);

}  // namespace witforge::scene
