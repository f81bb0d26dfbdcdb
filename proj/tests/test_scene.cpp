#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "testutil.hpp"
#include "witforge/scene.hpp"

using namespace witforge;
using namespace witforge::scene;
using witforge::Rng;

namespace {

EntityPlacement box(const std::string& name, double x, double y, double z, double sx, double sy,
                    double sz) {
    EntityPlacement e;
    e.name = name;
    e.source = {SourceRef::Kind::primitive, "box"};
    e.position = {x, y, z};
    e.size = {sx, sy, sz};
    return e;
}

SceneConfig scene_with(std::vector<EntityPlacement> entities) {
    SceneConfig s;
    s.workspace = WorkspaceSpec::defaults();
    s.entities = std::move(entities);
    return s;
}

bool has_code(const schema::ValidationOutcome& outcome, const char* code) {
    for (const auto& v : outcome.violations) {
        if (v.code == code) return true;
    }
    return false;
}

ObjectState rigid_state(const Vec3& pos, const Vec3& euler, const Vec3& vel) {
    ObjectState s;
    s.material = ObjectState::Material::rigid;
    s.pos = {pos};
    s.vel = {vel};
    s.euler_deg = euler;
    return s;
}

// Independent corner rotation for the footprint oracle: applies Rx, then
// Ry, then Rz, one axis at a time.
Vec3 rotate_stepwise(const Vec3& p, const Vec3& euler_deg) {
    const double d2r = 3.14159265358979323846 / 180.0;
    Vec3 v = p;
    {
        const double c = std::cos(euler_deg.x * d2r), s = std::sin(euler_deg.x * d2r);
        v = {v.x, c * v.y - s * v.z, s * v.y + c * v.z};
    }
    {
        const double c = std::cos(euler_deg.y * d2r), s = std::sin(euler_deg.y * d2r);
        v = {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
    }
    {
        const double c = std::cos(euler_deg.z * d2r), s = std::sin(euler_deg.z * d2r);
        v = {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
    }
    return v;
}

}  // namespace

TEST_CASE("default workspace matches the reference tabletop constants bit-exactly") {
    const WorkspaceSpec ws = WorkspaceSpec::defaults();
    CHECK(ws.table_height == 0.76);
    CHECK(ws.table_surface == Region2D{0.21, 1.00, -0.69, 0.69});
    CHECK(ws.reachable == Region2D{0.30, 0.72, -0.45, 0.45});
    REQUIRE(ws.forbidden.size() == 2);
    CHECK(ws.forbidden[0] == Region2D{0.30, 0.61, 0.20, 0.40});
    CHECK(ws.forbidden[1] == Region2D{0.30, 0.61, -0.40, -0.20});

    // 0.79 m x 1.38 m table
    CHECK(ws.table_surface.x_max - ws.table_surface.x_min == doctest::Approx(0.79).epsilon(1e-12));
    CHECK(ws.table_surface.y_max - ws.table_surface.y_min == doctest::Approx(1.38).epsilon(1e-12));

    const WorkspaceSpec back = WorkspaceSpec::from_json(ws.to_json());
    CHECK(back == ws);
    CHECK(back.to_json().dump() == ws.to_json().dump());
}

TEST_CASE("canonical cube placement validates cleanly") {
    auto s = scene_with({box("cube", 0.5, 0.0, 0.76 + 0.04, 0.08, 0.08, 0.08)});
    CHECK(validate_scene(s).ok());
}

TEST_CASE("footprint in the arm region is IN_FORBIDDEN; shifted placement passes") {
    auto bad = scene_with({box("cube", 0.45, 0.30, 0.76 + 0.05, 0.1, 0.1, 0.1)});
    const auto outcome = validate_scene(bad);
    CHECK(has_code(outcome, codes::kInForbidden));
    CHECK(!has_code(outcome, codes::kOutOfReachable));

    auto good = scene_with({box("cube", 0.45, 0.10, 0.76 + 0.05, 0.1, 0.1, 0.1)});
    CHECK(validate_scene(good).ok());
}

TEST_CASE("coincident cubes interpenetrate") {
    auto s = scene_with({box("a", 0.5, 0.0, 0.8, 0.08, 0.08, 0.08),
                         box("b", 0.5, 0.0, 0.8, 0.08, 0.08, 0.08)});
    CHECK(has_code(validate_scene(s), codes::kAabbOverlap));
}

TEST_CASE("grouped entities may touch and support each other") {
    auto base = box("base", 0.5, 0.0, 0.76 + 0.025, 0.1, 0.1, 0.05);
    auto top = box("top", 0.5, 0.0, 0.76 + 0.05 + 0.02, 0.04, 0.04, 0.04);
    auto s = scene_with({base, top});
    auto outcome = validate_scene(s);
    CHECK(has_code(outcome, codes::kUnsupported));  // top floats without a group

    s.groups.emplace_back("base", "top");
    CHECK(validate_scene(s).ok());
}

TEST_CASE("out-of-reach placements need the explicit intent flag") {
    auto far = box("roll", 0.9, 0.0, 0.76 + 0.03, 0.06, 0.06, 0.06);
    auto s = scene_with({far});
    CHECK(has_code(validate_scene(s), codes::kOutOfReachable));

    s.entities[0].out_of_reach_intended = true;
    CHECK(validate_scene(s).ok());
}

TEST_CASE("fixed entities may float") {
    auto beam = box("beam", 0.5, 0.0, 1.1, 0.4, 0.04, 0.04);
    beam.physical.fixed = true;
    CHECK(validate_scene(scene_with({beam})).ok());
}

TEST_CASE("particles demand a container that actually contains them") {
    auto cup = box("cup", 0.5, 0.0, 0.76 + 0.05, 0.1, 0.1, 0.1);
    auto water = box("water", 0.5, 0.0, 0.76 + 0.03, 0.06, 0.06, 0.06);
    water.material_kind = MaterialKind::particle_fluid;

    auto none = scene_with({cup, water});
    CHECK(has_code(validate_scene(none), codes::kParticlesUncontained));

    auto contained = scene_with({cup, water});
    contained.entities[1].containing_volume = "cup";
    CHECK(validate_scene(contained).ok());

    auto escaping = scene_with({cup, water});
    escaping.entities[1].containing_volume = "cup";
    escaping.entities[1].position.z = 0.76 + 0.09;  // overflows the cup top
    CHECK(has_code(validate_scene(escaping), codes::kParticlesUncontained));
}

TEST_CASE("validate_scene is order-independent over entities") {
    auto a = box("a", 0.45, 0.30, 0.8, 0.1, 0.1, 0.1);
    auto b = box("b", 0.36, 0.0, 0.76 + 0.04, 0.08, 0.08, 0.08);
    const auto first = validate_scene(scene_with({a, b}));
    const auto second = validate_scene(scene_with({b, a}));
    std::multiset<std::string> codes_a, codes_b;
    for (const auto& v : first.violations) codes_a.insert(v.code);
    for (const auto& v : second.violations) codes_b.insert(v.code);
    CHECK(codes_a == codes_b);
}

TEST_CASE("accepted scenes have zero pairwise footprint overlap") {
    auto s = scene_with({box("a", 0.40, -0.10, 0.8, 0.08, 0.08, 0.08),
                         box("b", 0.55, 0.10, 0.8, 0.08, 0.08, 0.08),
                         box("c", 0.65, -0.25, 0.8, 0.08, 0.08, 0.08)});
    REQUIRE(validate_scene(s).ok());
    for (std::size_t i = 0; i < s.entities.size(); ++i) {
        for (std::size_t j = i + 1; j < s.entities.size(); ++j) {
            const auto inter =
                geom::convex_intersection(footprint(s.entities[i]), footprint(s.entities[j]));
            CHECK((!inter || geom::area(*inter) <= 1e-9));
        }
    }
}

TEST_CASE("footprint of an axis-aligned unit cube is the unit square") {
    auto e = box("cube", 0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
    const auto poly = footprint(e);
    REQUIRE(poly.size() == 4);
    CHECK(geom::area(poly) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("yawed cube keeps footprint area") {
    auto e = box("cube", 0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
    e.euler_deg = {0, 0, 45};
    CHECK(geom::area(footprint(e)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("footprint matches corner-projection oracle on random boxes") {
    Rng rng(97531);
    for (int trial = 0; trial < 200; ++trial) {
        EntityPlacement e = box("b", rng.next_in(-1, 1), rng.next_in(-1, 1), rng.next_in(-1, 1),
                                rng.next_in(0.05, 0.5), rng.next_in(0.05, 0.5),
                                rng.next_in(0.05, 0.5));
        e.euler_deg = {rng.next_in(-180, 180), rng.next_in(-180, 180), rng.next_in(-180, 180)};
        e.scale = {rng.next_in(0.5, 2.0), rng.next_in(0.5, 2.0), rng.next_in(0.5, 2.0)};

        const auto poly = footprint(e);

        std::vector<geom::Vec2> oracle_xy;
        const Vec3 half{e.size.x * e.scale.x / 2, e.size.y * e.scale.y / 2,
                        e.size.z * e.scale.z / 2};
        for (const double sx : {-1.0, 1.0}) {
            for (const double sy : {-1.0, 1.0}) {
                for (const double sz : {-1.0, 1.0}) {
                    const Vec3 w =
                        rotate_stepwise({half.x * sx, half.y * sy, half.z * sz}, e.euler_deg) +
                        e.position;
                    oracle_xy.push_back({w.x, w.y});
                }
            }
        }
        const double oracle_area = geom::area(geom::hull_2d(oracle_xy));
        CHECK(geom::area(poly) == doctest::Approx(oracle_area).epsilon(1e-9));
    }
}

TEST_CASE("square-footprint boxes under yaw fill at least half their bounding rectangle") {
    // This ratio bound only holds for square xy cross-sections rotated about
    // z (minimum 1/2 at 45 degrees); elongated or tumbled boxes can fill an
    // arbitrarily small fraction of their bounding rectangle.
    Rng rng(86420);
    for (int trial = 0; trial < 100; ++trial) {
        const double side = rng.next_in(0.05, 0.5);
        EntityPlacement e = box("b", rng.next_in(-1, 1), rng.next_in(-1, 1), 0.0, side, side,
                                rng.next_in(0.05, 0.5));
        e.euler_deg = {0, 0, rng.next_in(-180, 180)};
        const auto poly = footprint(e);
        double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
        for (const auto& v : poly.vertices) {
            x_lo = std::min(x_lo, v.x); x_hi = std::max(x_hi, v.x);
            y_lo = std::min(y_lo, v.y); y_hi = std::max(y_hi, v.y);
        }
        CHECK(geom::area(poly) >= 0.5 * (x_hi - x_lo) * (y_hi - y_lo) - 1e-12);
    }
}

TEST_CASE("scene JSON round-trips") {
    auto cup = box("cup", 0.5, 0.0, 0.81, 0.1, 0.1, 0.1);
    auto water = box("water", 0.5, 0.0, 0.79, 0.06, 0.06, 0.05);
    water.material_kind = MaterialKind::particle_fluid;
    water.containing_volume = "cup";
    auto s = scene_with({cup, water});
    s.groups.emplace_back("cup", "water");

    const SceneConfig back = SceneConfig::parse(s.to_json().dump());
    CHECK(back == s);
}

TEST_CASE("settle_check thresholds") {
    auto s = scene_with({box("cube", 0.5, 0.0, 0.8, 0.08, 0.08, 0.08)});
    ObjsSnapshot before, after;
    before.objects["cube"] = rigid_state({0.5, 0, 0.8}, {0, 0, 0}, {0, 0, 0});
    after.objects["cube"] = before.objects["cube"];
    CHECK(settle_check(s, before, after));

    after.objects["cube"].pos[0].x += 0.05;
    CHECK(!settle_check(s, before, after));

    after.objects["cube"] = before.objects["cube"];
    after.objects["cube"].euler_deg = Vec3{0, 0, 3.0};
    CHECK(!settle_check(s, before, after));

    after.objects["cube"] = before.objects["cube"];
    after.objects["cube"].vel[0] = {0.01, 0, 0};
    CHECK(!settle_check(s, before, after));

    ObjsSnapshot missing;
    CHECK_THROWS_AS(settle_check(s, before, missing), MissingEntity);
}

TEST_CASE("sub-millimeter jitter always settles") {
    auto s = scene_with({box("cube", 0.5, 0.0, 0.8, 0.08, 0.08, 0.08)});
    Rng rng(5150);
    for (int trial = 0; trial < 100; ++trial) {
        ObjsSnapshot before, after;
        before.objects["cube"] = rigid_state({0.5, 0, 0.8}, {0, 0, 0}, {0, 0, 0});
        const double dx = rng.next_in(-5e-4, 5e-4);
        const double dy = rng.next_in(-5e-4, 5e-4);
        after.objects["cube"] =
            rigid_state({0.5 + dx, dy, 0.8}, {0, 0, rng.next_in(-0.5, 0.5)},
                        {rng.next_in(-5e-4, 5e-4), 0, 0});
        CHECK(settle_check(s, before, after));
    }
}

TEST_CASE("particle settle uses the centroid") {
    auto sand = box("sand", 0.5, 0.0, 0.78, 0.05, 0.05, 0.03);
    sand.material_kind = MaterialKind::particle_granular;
    sand.containing_bounds = {{Vec3{0.4, -0.1, 0.76}, Vec3{0.6, 0.1, 0.9}}};
    auto s = scene_with({sand});

    ObjsSnapshot before, after;
    ObjectState p;
    p.material = ObjectState::Material::particle;
    p.pos = {{0.5, 0.0, 0.78}, {0.51, 0.01, 0.78}};
    p.vel = {{0, 0, 0}, {0, 0, 0}};
    before.objects["sand"] = p;

    // particles swirl but the centroid stays put
    ObjectState q = p;
    q.pos = {{0.51, 0.01, 0.78}, {0.5, 0.0, 0.78}};
    after.objects["sand"] = q;
    CHECK(settle_check(s, before, after));

    for (auto& row : q.pos) row.x += 0.02;
    after.objects["sand"] = q;
    CHECK(!settle_check(s, before, after));
}
