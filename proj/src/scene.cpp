#include "witforge/scene.hpp"

#include <algorithm>
#include <cmath>

namespace witforge::scene {

using json = nlohmann::json;
using schema::Severity;
using schema::ValidationOutcome;
using schema::Violation;

bool Region2D::contains(const Region2D& inner) const {
    return inner.x_min >= x_min - 1e-12 && inner.x_max <= x_max + 1e-12 &&
           inner.y_min >= y_min - 1e-12 && inner.y_max <= y_max + 1e-12;
}

Region2D Region2D::from_json(const json& j) {
    if (!j.is_object()) throw SceneError("region: expected an object");
    Region2D r;
    for (const char* key : {"x_min", "x_max", "y_min", "y_max"}) {
        if (!j.contains(key) || !j[key].is_number()) {
            throw SceneError(std::string("region: missing numeric ") + key);
        }
    }
    r.x_min = j["x_min"].get<double>();
    r.x_max = j["x_max"].get<double>();
    r.y_min = j["y_min"].get<double>();
    r.y_max = j["y_max"].get<double>();
    if (!r.valid()) throw SceneError("region: min must be below max");
    return r;
}

json Region2D::to_json() const {
    return {{"x_min", x_min}, {"x_max", x_max}, {"y_min", y_min}, {"y_max", y_max}};
}

WorkspaceSpec WorkspaceSpec::defaults() {
    WorkspaceSpec ws;
    ws.table_surface = {0.21, 1.00, -0.69, 0.69};  // 0.79 m x 1.38 m table
    ws.table_height = 0.76;
    ws.reachable = {0.30, 0.72, -0.45, 0.45};
    ws.forbidden = {{0.30, 0.61, 0.20, 0.40}, {0.30, 0.61, -0.40, -0.20}};
    return ws;
}

WorkspaceSpec WorkspaceSpec::from_json(const json& j) {
    if (!j.is_object()) throw SceneError("workspace: expected an object");
    WorkspaceSpec ws;
    ws.table_surface = Region2D::from_json(j.at("table_surface"));
    if (!j.contains("table_height") || !j["table_height"].is_number()) {
        throw SceneError("workspace: missing numeric table_height");
    }
    ws.table_height = j["table_height"].get<double>();
    ws.reachable = Region2D::from_json(j.at("reachable"));
    if (j.contains("forbidden")) {
        if (!j["forbidden"].is_array()) throw SceneError("workspace: forbidden must be an array");
        for (const auto& f : j["forbidden"]) ws.forbidden.push_back(Region2D::from_json(f));
    }
    return ws;
}

json WorkspaceSpec::to_json() const {
    json f = json::array();
    for (const auto& r : forbidden) f.push_back(r.to_json());
    return {{"table_surface", table_surface.to_json()},
            {"table_height", table_height},
            {"reachable", reachable.to_json()},
            {"forbidden", std::move(f)}};
}

const char* to_string(MaterialKind k) {
    switch (k) {
        case MaterialKind::rigid: return "rigid";
        case MaterialKind::particle_fluid: return "particle_fluid";
        case MaterialKind::particle_granular: return "particle_granular";
        case MaterialKind::particle_soft: return "particle_soft";
    }
    return "rigid";
}

std::optional<MaterialKind> material_kind_from_string(const std::string& s) {
    if (s == "rigid") return MaterialKind::rigid;
    if (s == "particle_fluid") return MaterialKind::particle_fluid;
    if (s == "particle_granular") return MaterialKind::particle_granular;
    if (s == "particle_soft") return MaterialKind::particle_soft;
    return std::nullopt;
}

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

// R = Rz(yaw) Ry(pitch) Rx(roll), angles in degrees.
std::array<std::array<double, 3>, 3> rotation(const Vec3& euler_deg) {
    const double cr = std::cos(euler_deg.x * kDegToRad), sr = std::sin(euler_deg.x * kDegToRad);
    const double cp = std::cos(euler_deg.y * kDegToRad), sp = std::sin(euler_deg.y * kDegToRad);
    const double cy = std::cos(euler_deg.z * kDegToRad), sy = std::sin(euler_deg.z * kDegToRad);
    return {{{cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr},
             {sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr},
             {-sp, cp * sr, cp * cr}}};
}

}  // namespace

std::array<Vec3, 8> EntityPlacement::world_corners() const {
    const Vec3 half{size.x * scale.x / 2.0, size.y * scale.y / 2.0, size.z * scale.z / 2.0};
    const auto rot = rotation(euler_deg);
    std::array<Vec3, 8> out;
    std::size_t i = 0;
    for (const double sx : {-1.0, 1.0}) {
        for (const double sy : {-1.0, 1.0}) {
            for (const double sz : {-1.0, 1.0}) {
                const Vec3 local{half.x * sx, half.y * sy, half.z * sz};
                out[i++] = {
                    position.x + rot[0][0] * local.x + rot[0][1] * local.y + rot[0][2] * local.z,
                    position.y + rot[1][0] * local.x + rot[1][1] * local.y + rot[1][2] * local.z,
                    position.z + rot[2][0] * local.x + rot[2][1] * local.y + rot[2][2] * local.z};
            }
        }
    }
    return out;
}

std::array<Vec3, 2> EntityPlacement::world_aabb() const {
    const auto corners = world_corners();
    Vec3 lo = corners[0], hi = corners[0];
    for (const auto& c : corners) {
        lo.x = std::min(lo.x, c.x); hi.x = std::max(hi.x, c.x);
        lo.y = std::min(lo.y, c.y); hi.y = std::max(hi.y, c.y);
        lo.z = std::min(lo.z, c.z); hi.z = std::max(hi.z, c.z);
    }
    return {lo, hi};
}

geom::Polygon2D footprint(const EntityPlacement& e) {
    if (e.scale.x <= 0 || e.scale.y <= 0 || e.scale.z <= 0) {
        throw SceneError("footprint: scale must be positive");
    }
    std::vector<geom::Vec2> xy;
    for (const auto& c : e.world_corners()) xy.push_back({c.x, c.y});
    return geom::hull_2d(xy);
}

namespace {

Vec3 vec3_field(const json& j, const char* key, std::optional<Vec3> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw SceneError(std::string("entity: missing ") + key);
    }
    const auto& v = j[key];
    if (v.is_number()) {
        const double s = v.get<double>();
        return {s, s, s};
    }
    if (!v.is_array() || v.size() != 3) {
        throw SceneError(std::string("entity: ") + key + " must be [x, y, z] or a scalar");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

EntityPlacement entity_from_json(const json& j) {
    if (!j.is_object()) throw SceneError("entity: expected an object");
    EntityPlacement e;
    if (!j.contains("name") || !j["name"].is_string()) throw SceneError("entity: missing name");
    e.name = j["name"].get<std::string>();

    const auto& src = j.at("source");
    const std::string kind = src.value("kind", "");
    if (kind == "primitive") {
        e.source = {SourceRef::Kind::primitive, src.value("primitive", "box")};
    } else if (kind == "asset") {
        e.source = {SourceRef::Kind::asset, src.value("asset_id", "")};
    } else {
        throw SceneError("entity " + e.name + ": source.kind must be primitive or asset");
    }

    e.position = vec3_field(j, "position");
    e.euler_deg = vec3_field(j, "euler", Vec3{0, 0, 0});
    e.size = vec3_field(j, "size", Vec3{1, 1, 1});
    e.scale = vec3_field(j, "scale", Vec3{1, 1, 1});
    if (e.scale.x <= 0 || e.scale.y <= 0 || e.scale.z <= 0) {
        throw SceneError("entity " + e.name + ": scale must be positive");
    }

    const auto mk = material_kind_from_string(j.value("material_kind", "rigid"));
    if (!mk) throw SceneError("entity " + e.name + ": unknown material_kind");
    e.material_kind = *mk;

    if (j.contains("physical")) {
        const auto& p = j["physical"];
        e.physical.density = p.value("density", 1000.0);
        e.physical.friction = p.value("friction", 0.5);
        e.physical.fixed = p.value("fixed", false);
        if (e.physical.density <= 0) throw SceneError("entity " + e.name + ": density must be > 0");
        if (e.physical.friction < 0) throw SceneError("entity " + e.name + ": friction must be >= 0");
    }
    e.out_of_reach_intended = j.value("out_of_reach_intended", false);
    if (j.contains("containing_volume") && !j["containing_volume"].is_null()) {
        e.containing_volume = j["containing_volume"].get<std::string>();
    }
    if (j.contains("containing_bounds") && !j["containing_bounds"].is_null()) {
        const auto& b = j["containing_bounds"];
        if (!b.is_array() || b.size() != 2) {
            throw SceneError("entity " + e.name + ": containing_bounds must be [[min], [max]]");
        }
        auto row = [&](const json& r) -> Vec3 {
            return {r[0].get<double>(), r[1].get<double>(), r[2].get<double>()};
        };
        e.containing_bounds = {{row(b[0]), row(b[1])}};
    }
    return e;
}

json entity_to_json(const EntityPlacement& e) {
    json j = json::object();
    j["name"] = e.name;
    if (e.source.kind == SourceRef::Kind::primitive) {
        j["source"] = {{"kind", "primitive"}, {"primitive", e.source.id}};
    } else {
        j["source"] = {{"kind", "asset"}, {"asset_id", e.source.id}};
    }
    j["position"] = {e.position.x, e.position.y, e.position.z};
    j["euler"] = {e.euler_deg.x, e.euler_deg.y, e.euler_deg.z};
    j["size"] = {e.size.x, e.size.y, e.size.z};
    j["scale"] = {e.scale.x, e.scale.y, e.scale.z};
    j["material_kind"] = to_string(e.material_kind);
    j["physical"] = {{"density", e.physical.density},
                     {"friction", e.physical.friction},
                     {"fixed", e.physical.fixed}};
    if (e.out_of_reach_intended) j["out_of_reach_intended"] = true;
    if (e.containing_volume) j["containing_volume"] = *e.containing_volume;
    if (e.containing_bounds) {
        const auto& b = *e.containing_bounds;
        j["containing_bounds"] = {{b[0].x, b[0].y, b[0].z}, {b[1].x, b[1].y, b[1].z}};
    }
    return j;
}

}  // namespace

SceneConfig SceneConfig::from_json(const json& j) {
    if (!j.is_object()) throw SceneError("scene: expected an object");
    SceneConfig s;
    s.workspace = j.contains("workspace") ? WorkspaceSpec::from_json(j["workspace"])
                                          : WorkspaceSpec::defaults();
    if (j.contains("entities")) {
        if (!j["entities"].is_array()) throw SceneError("scene: entities must be an array");
        for (const auto& e : j["entities"]) s.entities.push_back(entity_from_json(e));
    }
    if (j.contains("groups")) {
        for (const auto& g : j["groups"]) {
            s.groups.emplace_back(g.at("supporter").get<std::string>(),
                                  g.at("supported").get<std::string>());
        }
    }
    return s;
}

SceneConfig SceneConfig::parse(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneError(e.what());
    }
    return from_json(doc);
}

json SceneConfig::to_json() const {
    json entities = json::array();
    for (const auto& e : this->entities) entities.push_back(entity_to_json(e));
    json groups = json::array();
    for (const auto& [supporter, supported] : this->groups) {
        groups.push_back({{"supporter", supporter}, {"supported", supported}});
    }
    return {{"workspace", workspace.to_json()},
            {"entities", std::move(entities)},
            {"groups", std::move(groups)}};
}

namespace {

bool inside_region(const geom::Polygon2D& poly, const Region2D& r) {
    for (const auto& v : poly.vertices) {
        if (v.x < r.x_min - 1e-9 || v.x > r.x_max + 1e-9 || v.y < r.y_min - 1e-9 ||
            v.y > r.y_max + 1e-9) {
            return false;
        }
    }
    return true;
}

bool overlaps_region(const geom::Polygon2D& poly, const Region2D& r) {
    const auto inter = geom::convex_intersection(poly, r.polygon());
    return inter.has_value();
}

}  // namespace

ValidationOutcome validate_scene(const SceneConfig& s) {
    ValidationOutcome out;
    auto add = [&](const char* code, const std::string& path, const std::string& message) {
        out.violations.push_back({code, Severity::error, path, message});
    };

    const auto& ws = s.workspace;
    if (!ws.table_surface.contains(ws.reachable)) {
        add(codes::kWorkspaceInvalid, "/workspace/reachable",
            "reachable region escapes the table surface");
    }
    for (std::size_t i = 0; i < ws.forbidden.size(); ++i) {
        if (!ws.table_surface.contains(ws.forbidden[i])) {
            add(codes::kWorkspaceInvalid, "/workspace/forbidden/" + std::to_string(i),
                "forbidden region escapes the table surface");
        }
    }

    struct Derived {
        geom::Polygon2D poly;
        std::array<Vec3, 2> aabb;
    };
    std::vector<Derived> derived;
    derived.reserve(s.entities.size());
    for (const auto& e : s.entities) {
        derived.push_back({footprint(e), e.world_aabb()});
    }

    auto grouped = [&](const std::string& a, const std::string& b) {
        for (const auto& [supporter, supported] : s.groups) {
            if ((supporter == a && supported == b) || (supporter == b && supported == a)) {
                return true;
            }
        }
        return false;
    };
    auto entity_index = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < s.entities.size(); ++i) {
            if (s.entities[i].name == name) return i;
        }
        return std::nullopt;
    };

    for (std::size_t i = 0; i < s.entities.size(); ++i) {
        const auto& e = s.entities[i];
        const std::string path = "/entities/" + std::to_string(i);

        if (!e.out_of_reach_intended && !inside_region(derived[i].poly, ws.reachable)) {
            add(codes::kOutOfReachable, path,
                "footprint of \"" + e.name + "\" leaves the reachable region");
        }
        for (std::size_t f = 0; f < ws.forbidden.size(); ++f) {
            if (overlaps_region(derived[i].poly, ws.forbidden[f])) {
                add(codes::kInForbidden, path,
                    "footprint of \"" + e.name + "\" intersects forbidden region " +
                        std::to_string(f));
            }
        }

        if (e.material_kind == MaterialKind::rigid && !e.physical.fixed) {
            const double bottom = derived[i].aabb[0].z;
            bool supported = std::abs(bottom - ws.table_height) <= kSupportToleranceM;
            for (const auto& [supporter, supported_name] : s.groups) {
                if (supported_name != e.name) continue;
                const auto si = entity_index(supporter);
                if (!si) continue;
                if (std::abs(bottom - derived[*si].aabb[1].z) <= kSupportToleranceM) {
                    supported = true;
                }
            }
            if (!supported) {
                add(codes::kUnsupported, path,
                    "\"" + e.name + "\" rests neither on the table nor on a supporter");
            }
        }

        if (is_particle(e.material_kind)) {
            const auto& own = derived[i].aabb;
            std::optional<std::array<Vec3, 2>> container;
            if (e.containing_volume) {
                const auto ci = entity_index(*e.containing_volume);
                if (ci) container = derived[*ci].aabb;
            } else if (e.containing_bounds) {
                container = e.containing_bounds;
            }
            if (!container) {
                add(codes::kParticlesUncontained, path,
                    "particle entity \"" + e.name + "\" has no containing volume or bounds");
            } else {
                const double tol = 1e-6;
                const bool inside = own[0].x >= (*container)[0].x - tol &&
                                    own[0].y >= (*container)[0].y - tol &&
                                    own[0].z >= (*container)[0].z - tol &&
                                    own[1].x <= (*container)[1].x + tol &&
                                    own[1].y <= (*container)[1].y + tol &&
                                    own[1].z <= (*container)[1].z + tol;
                if (!inside) {
                    add(codes::kParticlesUncontained, path,
                        "particles of \"" + e.name + "\" exceed their container bounds");
                }
            }
        }
    }

    for (std::size_t i = 0; i < s.entities.size(); ++i) {
        for (std::size_t j = i + 1; j < s.entities.size(); ++j) {
            const auto& a = s.entities[i];
            const auto& b = s.entities[j];
            if (grouped(a.name, b.name)) continue;
            if (is_particle(a.material_kind) && a.containing_volume == b.name) continue;
            if (is_particle(b.material_kind) && b.containing_volume == a.name) continue;

            const auto& ba = derived[i].aabb;
            const auto& bb = derived[j].aabb;
            const double ox = std::min(ba[1].x, bb[1].x) - std::max(ba[0].x, bb[0].x);
            const double oy = std::min(ba[1].y, bb[1].y) - std::max(ba[0].y, bb[0].y);
            const double oz = std::min(ba[1].z, bb[1].z) - std::max(ba[0].z, bb[0].z);
            if (ox > 0 && oy > 0 && oz > 0 && std::min({ox, oy, oz}) > kOverlapToleranceM) {
                add(codes::kAabbOverlap, "/entities/" + std::to_string(i),
                    "\"" + a.name + "\" and \"" + b.name + "\" interpenetrate");
            }
        }
    }
    return out;
}

namespace {

double angle_delta_deg(double a, double b) {
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

}  // namespace

bool settle_check(const SceneConfig& s, const ObjsSnapshot& before, const ObjsSnapshot& after) {
    for (const auto& e : s.entities) {
        const auto* b = before.find(e.name);
        const auto* a = after.find(e.name);
        if (!b || !a) throw MissingEntity(e.name);

        if (e.material_kind == MaterialKind::rigid) {
            if (norm(a->pos.at(0) - b->pos.at(0)) >= kSettleMoveToleranceM) return false;
            if (b->euler_deg && a->euler_deg) {
                if (angle_delta_deg(a->euler_deg->x, b->euler_deg->x) >= kSettleRotToleranceDeg ||
                    angle_delta_deg(a->euler_deg->y, b->euler_deg->y) >= kSettleRotToleranceDeg ||
                    angle_delta_deg(a->euler_deg->z, b->euler_deg->z) >= kSettleRotToleranceDeg) {
                    return false;
                }
            }
            if (a->speed() >= kSettleSpeedTolerance) return false;
        } else {
            if (norm(a->centroid() - b->centroid()) >= kSettleMoveToleranceM) return false;
        }
    }
    return true;
}

}  // namespace witforge::scene
