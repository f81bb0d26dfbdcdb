#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "testutil.hpp"
#include "witforge/metriclang.hpp"

using namespace witforge;
using namespace witforge::metriclang;
using witforge::Rng;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MetricProgram fixture_metric() {
    return parse_metric(read_file(wftest::test_data_dir() + "/fixtures/retrieve_cube_metric.wit"));
}

ObjsSnapshot fixture_snapshot(const std::string& name) {
    return ObjsSnapshot::parse(read_file(wftest::test_data_dir() + "/fixtures/" + name));
}

// --- random well-typed AST generator for the round-trip property ---

ExprPtr make_expr(Expr e) { return std::make_shared<Expr>(std::move(e)); }

ExprPtr gen_number(Rng& rng, int depth);
ExprPtr gen_bool(Rng& rng, int depth);

ExprPtr gen_object(Rng& rng) {
    static const std::vector<std::string> names{"cube", "target_area", "board", "cup"};
    Expr e;
    e.kind = Expr::Kind::string_lit;
    e.string_value = names[rng.next_below(names.size())];
    return make_expr(std::move(e));
}

ExprPtr gen_call_number(Rng& rng, int depth) {
    Expr e;
    e.kind = Expr::Kind::call;
    switch (rng.next_below(5)) {
        case 0: e.callee = "vel_norm"; e.args = {gen_object(rng)}; break;
        case 1: e.callee = "min_z"; e.args = {gen_object(rng)}; break;
        case 2: e.callee = "dist"; e.args = {gen_object(rng), gen_object(rng)}; break;
        case 3: e.callee = "overlap_frac"; e.args = {gen_object(rng), gen_object(rng)}; break;
        default: {
            Expr pos;
            pos.kind = Expr::Kind::call;
            pos.callee = "pos";
            pos.args = {gen_object(rng)};
            e.callee = rng.next_below(2) ? "x_of" : "z_of";
            e.args = {make_expr(std::move(pos))};
            break;
        }
    }
    (void)depth;
    return make_expr(std::move(e));
}

ExprPtr gen_number(Rng& rng, int depth) {
    if (depth <= 0 || rng.next_double() < 0.4) {
        // a leading '-' re-parses as a unary node, so literals stay non-negative
        Expr e;
        e.kind = Expr::Kind::number_lit;
        e.number_value = rng.next_double() < 0.5
                             ? rng.next_in(0.0, 10.0)
                             : static_cast<double>(rng.next_below(100)) / 8.0;
        return make_expr(std::move(e));
    }
    if (rng.next_double() < 0.3) return gen_call_number(rng, depth - 1);
    if (rng.next_double() < 0.2) {
        Expr e;
        e.kind = Expr::Kind::unary;
        e.op = Expr::Op::neg;
        e.lhs = gen_number(rng, depth - 1);
        return make_expr(std::move(e));
    }
    Expr e;
    e.kind = Expr::Kind::binary;
    static const Expr::Op ops[] = {Expr::Op::add, Expr::Op::sub, Expr::Op::mul, Expr::Op::div};
    e.op = ops[rng.next_below(4)];
    e.lhs = gen_number(rng, depth - 1);
    e.rhs = gen_number(rng, depth - 1);
    return make_expr(std::move(e));
}

ExprPtr gen_bool(Rng& rng, int depth) {
    if (depth <= 0 || rng.next_double() < 0.2) {
        if (rng.next_double() < 0.5) {
            Expr e;
            e.kind = Expr::Kind::bool_lit;
            e.bool_value = rng.next_below(2) == 0;
            return make_expr(std::move(e));
        }
        Expr e;
        e.kind = Expr::Kind::call;
        if (rng.next_below(2)) {
            e.callee = "on_table";
            e.args = {gen_object(rng)};
        } else {
            e.callee = "still";
            e.args = {gen_object(rng), gen_number(rng, 0)};
        }
        return make_expr(std::move(e));
    }
    const double roll = rng.next_double();
    if (roll < 0.35) {
        Expr e;
        e.kind = Expr::Kind::binary;
        e.op = rng.next_below(2) ? Expr::Op::logical_and : Expr::Op::logical_or;
        e.lhs = gen_bool(rng, depth - 1);
        e.rhs = gen_bool(rng, depth - 1);
        return make_expr(std::move(e));
    }
    if (roll < 0.5) {
        Expr e;
        e.kind = Expr::Kind::unary;
        e.op = Expr::Op::logical_not;
        e.lhs = gen_bool(rng, depth - 1);
        return make_expr(std::move(e));
    }
    Expr e;
    e.kind = Expr::Kind::binary;
    static const Expr::Op ops[] = {Expr::Op::lt, Expr::Op::le, Expr::Op::gt,
                                   Expr::Op::ge, Expr::Op::eq, Expr::Op::ne};
    e.op = ops[rng.next_below(6)];
    e.lhs = gen_number(rng, depth - 1);
    e.rhs = gen_number(rng, depth - 1);
    return make_expr(std::move(e));
}

MetricProgram gen_program(Rng& rng) {
    MetricProgram p;
    p.success = gen_bool(rng, 4);
    const std::size_t n = rng.next_below(4);
    for (std::size_t i = 0; i < n; ++i) {
        Milestone m;
        m.name = "m" + std::to_string(i);
        m.weight = 0.5 + static_cast<double>(rng.next_below(8)) / 2.0;
        m.expr = gen_bool(rng, 3);
        p.milestones.push_back(std::move(m));
    }
    return p;
}

// Random snapshot with enough state for every builtin the generator emits.
ObjsSnapshot gen_snapshot(Rng& rng) {
    ObjsSnapshot snap;
    for (const std::string name : {"cube", "target_area", "board", "cup"}) {
        ObjectState s;
        s.material = ObjectState::Material::rigid;
        const double x = rng.next_in(0.35, 0.65);
        const double y = rng.next_in(-0.3, 0.3);
        const double z = rng.next_in(0.7, 1.0);
        const double half = rng.next_in(0.02, 0.08);
        s.pos = {{x, y, z}};
        s.vel = {{rng.next_in(-0.02, 0.02), rng.next_in(-0.02, 0.02), 0.0}};
        s.bounds = {{Vec3{x - half, y - half, z - half}, Vec3{x + half, y + half, z + half}}};
        s.convex_hull_2d = {
            {{x - half, y - half}, {x + half, y - half}, {x + half, y + half}, {x - half, y + half}}};
        snap.objects[name] = std::move(s);
    }
    return snap;
}

}  // namespace

TEST_CASE("canonical success expression parses") {
    const auto p = parse_metric(
        R"(metric { success: overlap_frac("cube","target_area") > 0.5 and vel_norm("cube") < 0.01; })");
    CHECK(p.milestones.empty());
    REQUIRE(p.referenced_objects.size() == 2);
    CHECK(p.referenced_objects[0] == "cube");
    CHECK(p.referenced_objects[1] == "target_area");
}

TEST_CASE("constant-true program") {
    const auto p = parse_metric("metric { success: true; }");
    CHECK(p.referenced_objects.empty());
    const auto r = evaluate(p, ObjsSnapshot{}, scene::WorkspaceSpec::defaults());
    CHECK(r.success);
    CHECK(r.progress == 1.0);
}

TEST_CASE("syntax errors carry line and column") {
    try {
        parse_metric("metric {\n  success: and true;\n}");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line == 2);
        CHECK(e.column > 1);
    }
    CHECK_THROWS_AS(parse_metric("metric { success: true }"), SyntaxError);   // missing ';'
    CHECK_THROWS_AS(parse_metric("metric { success: true; } extra"), SyntaxError);
    CHECK_THROWS_AS(parse_metric("metric { milestone m weight 1: true; }"), SyntaxError);
    CHECK_THROWS_AS(parse_metric("metric { success: true; milestone m weight 0: true; }"),
                    SyntaxError);
}

TEST_CASE("type errors") {
    CHECK_THROWS_AS(parse_metric(R"(metric { success: pos("cube") > 1; })"), TypeError);
    CHECK_THROWS_AS(parse_metric(R"(metric { success: "cube" and true; })"), TypeError);
    CHECK_THROWS_AS(parse_metric(R"(metric { success: vel_norm(1) < 1; })"), TypeError);
    CHECK_THROWS_AS(parse_metric(R"(metric { success: 1 + true > 0; })"), TypeError);
    CHECK_THROWS_AS(parse_metric(R"(metric { success: frobnicate("cube"); })"), UnknownBuiltin);
    CHECK_THROWS_AS(parse_metric(R"(metric { success: still("cube"); })"), TypeError);
}

TEST_CASE("precedence: or < and < not < comparison < additive < multiplicative") {
    const auto p = parse_metric(
        "metric { success: not 1 + 2 * 3 > 6 and true or false; }");
    // parses as ((not ((1 + (2*3)) > 6)) and true) or false = (not(7>6) and true) or false = false
    const auto r = evaluate(p, ObjsSnapshot{}, scene::WorkspaceSpec::defaults());
    CHECK(!r.success);

    const auto q = parse_metric("metric { success: 2 - 1 - 1 == 0; }");  // left associative
    CHECK(evaluate(q, ObjsSnapshot{}, scene::WorkspaceSpec::defaults()).success);
}

TEST_CASE("pretty-print round trip on 1000 random programs") {
    Rng rng(314159);
    for (int i = 0; i < 1000; ++i) {
        const MetricProgram p = gen_program(rng);
        const std::string src = to_source(p);
        MetricProgram back;
        CAPTURE(src);
        REQUIRE_NOTHROW(back = parse_metric(src));
        CHECK(back == p);
    }
}

TEST_CASE("retrieve-cube fixtures") {
    const MetricProgram p = fixture_metric();
    const auto ws = scene::WorkspaceSpec::defaults();

    SUBCASE("success snapshot") {
        const auto r = evaluate(p, fixture_snapshot("retrieve_cube_success.json"), ws);
        CHECK(r.success);
        CHECK(r.progress == 1.0);
        CHECK(!r.trace_contains(kFellOffCode));
    }
    SUBCASE("40 percent overlap misses the threshold") {
        const auto r = evaluate(p, fixture_snapshot("retrieve_cube_overlap40.json"), ws);
        CHECK(!r.success);
        CHECK(r.progress == doctest::Approx(0.5));  // near_target holds, over_target fails
    }
    SUBCASE("fallen cube forces failure with FELL_OFF") {
        const auto r = evaluate(p, fixture_snapshot("retrieve_cube_fallen.json"), ws);
        CHECK(!r.success);
        CHECK(r.trace_contains(kFellOffCode));
    }
}

TEST_CASE("weighted milestone fraction") {
    const auto p = parse_metric(R"(metric {
        success: false;
        milestone a weight 1: true;
        milestone b weight 1: true;
        milestone c weight 2: false;
    })");
    const auto r = evaluate(p, ObjsSnapshot{}, scene::WorkspaceSpec::defaults());
    CHECK(!r.success);
    CHECK(r.progress == doctest::Approx(0.5));
    REQUIRE(r.milestone_flags.size() == 3);
    CHECK(r.milestone_flags[0].second);
    CHECK(r.milestone_flags[2].second == false);
}

TEST_CASE("success implies full progress on fuzzed programs and snapshots") {
    Rng rng(777);
    int successes = 0;
    for (int i = 0; i < 500; ++i) {
        const MetricProgram p = gen_program(rng);
        const ObjsSnapshot snap = gen_snapshot(rng);
        MetricResult r;
        try {
            r = evaluate(p, snap, scene::WorkspaceSpec::defaults());
        } catch (const NumericError&) {
            continue;  // random arithmetic may legitimately divide by zero
        }
        if (r.success) {
            ++successes;
            CHECK(r.progress == 1.0);
        }
        CHECK(r.progress >= 0.0);
        CHECK(r.progress <= 1.0);
    }
    CHECK(successes > 0);  // the property must actually fire
}

TEST_CASE("milestone truth is monotone in progress") {
    const auto base = parse_metric(R"(metric {
        success: false;
        milestone a weight 1: false;
        milestone b weight 3: true;
    })");
    const auto flipped = parse_metric(R"(metric {
        success: false;
        milestone a weight 1: true;
        milestone b weight 3: true;
    })");
    const auto ws = scene::WorkspaceSpec::defaults();
    CHECK(evaluate(flipped, ObjsSnapshot{}, ws).progress >=
          evaluate(base, ObjsSnapshot{}, ws).progress);
}

TEST_CASE("hull is preferred over bounds") {
    const auto p = parse_metric(
        R"(metric { success: overlap_frac("cube", "target_area") > 0.9; })");
    auto snap = fixture_snapshot("retrieve_cube_success.json");

    const auto with_bounds = evaluate(p, snap, scene::WorkspaceSpec::defaults());

    // widen bounds wildly; with hulls present the result must not move
    auto& cube = snap.objects["cube"];
    cube.bounds = {{Vec3{0.0, -1.0, 0.76}, Vec3{1.0, 1.0, 0.84}}};
    const auto with_wild_bounds = evaluate(p, snap, scene::WorkspaceSpec::defaults());
    CHECK(with_bounds.success == with_wild_bounds.success);

    // drop bounds entirely
    cube.bounds.reset();
    const auto without_bounds = evaluate(p, snap, scene::WorkspaceSpec::defaults());
    CHECK(with_bounds.success == without_bounds.success);
}

TEST_CASE("bounds rectangle is the hull fallback") {
    ObjsSnapshot snap;
    ObjectState a;
    a.material = ObjectState::Material::rigid;
    a.pos = {{0.5, 0.0, 0.78}};
    a.vel = {{0, 0, 0}};
    a.bounds = {{Vec3{0.46, -0.04, 0.76}, Vec3{0.54, 0.04, 0.8}}};
    snap.objects["cube"] = a;
    snap.objects["target_area"] = a;

    const auto p = parse_metric(
        R"(metric { success: overlap_frac("cube", "target_area") >= 1.0; })");
    CHECK(evaluate(p, snap, scene::WorkspaceSpec::defaults()).success);

    snap.objects["cube"].bounds.reset();
    CHECK_THROWS_AS(evaluate(p, snap, scene::WorkspaceSpec::defaults()), NumericError);
}

TEST_CASE("particle builtins use centroid, max speed, and containment") {
    ObjsSnapshot snap;
    ObjectState water;
    water.material = ObjectState::Material::particle;
    water.pos = {{0.5, 0.0, 0.80}, {0.52, 0.0, 0.80}, {0.5, 0.02, 0.82}, {0.9, 0.0, 0.80}};
    water.vel = {{0, 0, 0}, {0, 0, 0}, {0.002, 0, 0}, {0, 0, 0}};
    snap.objects["water"] = water;

    ObjectState jar;
    jar.material = ObjectState::Material::rigid;
    jar.pos = {{0.51, 0.0, 0.80}};
    jar.vel = {{0, 0, 0}};
    jar.convex_hull_2d = {{{0.45, -0.05}, {0.58, -0.05}, {0.58, 0.05}, {0.45, 0.05}}};
    snap.objects["jar"] = jar;

    const auto p = parse_metric(R"(metric {
        success: contained_frac("water", "jar", 0.76, 0.9) >= 0.75 and still("water", 0.01);
        milestone calm weight 1: vel_norm("water") < 0.001;
    })");
    const auto r = evaluate(p, snap, scene::WorkspaceSpec::defaults());
    CHECK(r.success);  // 3 of 4 particles inside, max speed 0.002 < 0.01
    REQUIRE(r.milestone_flags.size() == 1);
    CHECK(!r.milestone_flags[0].second);  // 0.002 >= 0.001
}

TEST_CASE("missing objects are reported") {
    const auto p = parse_metric(R"(metric { success: vel_norm("ghost") < 1; })");
    CHECK_THROWS_AS(evaluate(p, ObjsSnapshot{}, scene::WorkspaceSpec::defaults()), MissingObject);
}

TEST_CASE("evaluation is deterministic") {
    const MetricProgram p = fixture_metric();
    const auto snap = fixture_snapshot("retrieve_cube_success.json");
    const auto ws = scene::WorkspaceSpec::defaults();
    const auto a = evaluate(p, snap, ws);
    const auto b = evaluate(p, snap, ws);
    CHECK(a.success == b.success);
    CHECK(a.progress == b.progress);
    CHECK(a.trace == b.trace);
}

TEST_CASE("bind shares one metric across a family and rejects renames") {
    schema::TaskSpec seed;
    seed.task_name = "retrieve cube";
    schema::ObjectSpec cube;
    cube.object_name = "cube";
    cube.potential_instances = {"wooden cube"};
    schema::ObjectSpec target;
    target.object_name = "target_area";
    target.potential_instances = {"green mat"};
    schema::ObjectSpec container;
    container.object_name = "narrow container";
    container.potential_instances = {"vase"};
    seed.object_list = {cube, target, container};
    seed.initial_scene_setup = "The 'cube' sits in the 'narrow container'.";
    seed.task_instruction = "Retrieve the cube.";
    seed.task_success_criteria =
        "the overlap between the 'cube' and the 'target_area' is greater than 50";
    seed.potential_solution = "Pour the 'cube' out.";
    seed.task_description = "Narrow opening.";

    std::map<std::string, schema::TaskSpec> tasks;
    tasks["seed"] = seed;
    for (int i = 1; i <= 3; ++i) {
        schema::TaskSpec member = seed;
        schema::ObjectSpec extra;
        extra.object_name = "distractor " + std::to_string(i);
        extra.potential_instances = {"fork"};
        member.object_list.push_back(extra);
        tasks["m" + std::to_string(i)] = member;
    }

    schema::TaskFamily family{"seed", {"seed", "m1", "m2", "m3"}, "metric.wit"};
    const MetricProgram p = fixture_metric();

    const BoundMetric bound = metriclang::bind(p, family, tasks);
    CHECK(bound.family.member_ids.size() == 4);
    CHECK(metriclang::bind(p, family, tasks) == bound);  // idempotent

    // a member renaming a success-criteria object breaks the binding
    auto& broken = tasks["m2"];
    broken.object_list[1].object_name = "target zone";
    CHECK_THROWS_AS(metriclang::bind(p, family, tasks), UnresolvedObject);

    // a metric referencing objects outside the criteria is rejected up front
    tasks["m2"].object_list[1].object_name = "target_area";
    const auto wide = parse_metric(R"(metric { success: on_table("narrow container"); })");
    CHECK_THROWS_AS(metriclang::bind(wide, family, tasks), UnresolvedObject);
}
