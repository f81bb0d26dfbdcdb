#include "witforge/snapshot.hpp"

#include <algorithm>

namespace witforge {

using json = nlohmann::json;

Vec3 ObjectState::centroid() const {
    if (pos.empty()) return {};
    Vec3 sum;
    for (const auto& p : pos) sum = sum + p;
    return sum * (1.0 / static_cast<double>(pos.size()));
}

double ObjectState::speed() const {
    double best = 0.0;
    for (const auto& v : vel) best = std::max(best, norm(v));
    return best;
}

const ObjectState* ObjsSnapshot::find(const std::string& name) const {
    const auto it = objects.find(name);
    return it == objects.end() ? nullptr : &it->second;
}

const ObjectState& ObjsSnapshot::at(const std::string& name) const {
    const auto* s = find(name);
    if (!s) throw SnapshotError("snapshot has no object \"" + name + "\"");
    return *s;
}

namespace {

Vec3 vec3_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number()) {
        throw SnapshotError(where + ": expected [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::vector<Vec3> rows_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw SnapshotError(where + ": expected an N x 3 array");
    std::vector<Vec3> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(vec3_from(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

json vec3_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

ObjsSnapshot ObjsSnapshot::from_json(const json& doc) {
    if (!doc.is_object()) throw SnapshotError("snapshot: expected an object keyed by name");
    ObjsSnapshot snap;
    for (const auto& [name, body] : doc.items()) {
        if (!body.is_object()) throw SnapshotError(name + ": expected an object");
        ObjectState s;

        const std::string material = body.value("material", "");
        if (material == "rigid") {
            s.material = ObjectState::Material::rigid;
        } else if (material == "particle") {
            s.material = ObjectState::Material::particle;
        } else {
            throw SnapshotError(name + ".material: expected \"rigid\" or \"particle\"");
        }

        if (!body.contains("pos")) throw SnapshotError(name + ": missing pos");
        if (!body.contains("vel")) throw SnapshotError(name + ": missing vel");

        if (s.is_rigid()) {
            s.pos = {vec3_from(body["pos"], name + ".pos")};
            s.vel = {vec3_from(body["vel"], name + ".vel")};
            if (body.contains("euler") && !body["euler"].is_null()) {
                s.euler_deg = vec3_from(body["euler"], name + ".euler");
            }
            if (body.contains("bounds") && !body["bounds"].is_null()) {
                const auto& b = body["bounds"];
                if (!b.is_array() || b.size() != 2) {
                    throw SnapshotError(name + ".bounds: expected [[min], [max]]");
                }
                const Vec3 lo = vec3_from(b[0], name + ".bounds[0]");
                const Vec3 hi = vec3_from(b[1], name + ".bounds[1]");
                if (lo.x > hi.x || lo.y > hi.y || lo.z > hi.z) {
                    throw SnapshotError(name + ".bounds: min exceeds max");
                }
                s.bounds = {{lo, hi}};
            }
            if (body.contains("convex_hull_2d") && !body["convex_hull_2d"].is_null()) {
                const auto& h = body["convex_hull_2d"];
                if (!h.is_array() || h.size() < 3) {
                    throw SnapshotError(name + ".convex_hull_2d: expected an N x 2 array, N >= 3");
                }
                std::vector<geom::Vec2> hull;
                for (const auto& row : h) {
                    if (!row.is_array() || row.size() != 2) {
                        throw SnapshotError(name + ".convex_hull_2d: expected [x, y] rows");
                    }
                    hull.push_back({row[0].get<double>(), row[1].get<double>()});
                }
                if (s.bounds) {
                    for (const auto& v : hull) {
                        if (v.x < (*s.bounds)[0].x - 1e-9 || v.x > (*s.bounds)[1].x + 1e-9 ||
                            v.y < (*s.bounds)[0].y - 1e-9 || v.y > (*s.bounds)[1].y + 1e-9) {
                            throw SnapshotError(name + ": convex_hull_2d escapes bounds in xy");
                        }
                    }
                }
                s.convex_hull_2d = std::move(hull);
            }
        } else {
            if (body.contains("euler") && !body["euler"].is_null()) {
                throw SnapshotError(name + ": particle objects carry no euler");
            }
            if (body.contains("bounds") && !body["bounds"].is_null()) {
                throw SnapshotError(name + ": particle objects carry no bounds");
            }
            s.pos = rows_from(body["pos"], name + ".pos");
            s.vel = rows_from(body["vel"], name + ".vel");
            if (s.pos.size() != s.vel.size()) {
                throw SnapshotError(name + ": pos and vel particle counts differ");
            }
        }
        snap.objects.emplace(name, std::move(s));
    }
    return snap;
}

ObjsSnapshot ObjsSnapshot::parse(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SnapshotError(e.what());
    }
    return from_json(doc);
}

json ObjsSnapshot::to_json() const {
    json doc = json::object();
    for (const auto& [name, s] : objects) {
        json body = json::object();
        if (s.is_rigid()) {
            body["material"] = "rigid";
            body["pos"] = vec3_to(s.pos.at(0));
            body["vel"] = vec3_to(s.vel.at(0));
            body["euler"] = s.euler_deg ? vec3_to(*s.euler_deg) : json(nullptr);
            if (s.bounds) {
                body["bounds"] = json::array({vec3_to((*s.bounds)[0]), vec3_to((*s.bounds)[1])});
            } else {
                body["bounds"] = nullptr;
            }
            if (s.convex_hull_2d) {
                json hull = json::array();
                for (const auto& v : *s.convex_hull_2d) hull.push_back(json::array({v.x, v.y}));
                body["convex_hull_2d"] = std::move(hull);
            } else {
                body["convex_hull_2d"] = nullptr;
            }
        } else {
            body["material"] = "particle";
            json pos = json::array(), vel = json::array();
            for (const auto& p : s.pos) pos.push_back(vec3_to(p));
            for (const auto& v : s.vel) vel.push_back(vec3_to(v));
            body["pos"] = std::move(pos);
            body["vel"] = std::move(vel);
        }
        doc[name] = std::move(body);
    }
    return doc;
}

}  // namespace witforge
