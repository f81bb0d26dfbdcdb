#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "testutil.hpp"
#include "witforge/rng.hpp"
#include "witforge/schema.hpp"

using namespace witforge::schema;
using witforge::Rng;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string legacy_task_text() {
    return read_file(wftest::test_data_dir() + "/fixtures/legacy_task.json");
}

TaskSpec small_task() {
    TaskSpec t;
    t.task_name = "move cube";
    ObjectSpec cube;
    cube.object_name = "cube";
    cube.potential_instances = {"wooden cube"};
    ObjectSpec target;
    target.object_name = "target_area";
    target.potential_instances = {"green mat"};
    t.object_list = {cube, target};
    t.initial_scene_setup = "Place the 'cube' left of the 'target_area'.";
    t.task_instruction = "Move the cube onto the green area.";
    t.task_success_criteria =
        "the overlap between the 'cube' and the 'target_area' is greater than 50 percent";
    t.potential_solution = "Pick the 'cube' and place it on the 'target_area'.";
    t.task_description = "Simple placement of the 'cube'.";
    return t;
}

// Random valid task generator for round-trip property tests.
TaskSpec random_task(Rng& rng) {
    static const std::vector<std::string> words{
        "cube",  "board", "cup",    "ramp",  "spoon", "block",
        "lever", "jar",   "funnel", "wedge", "tray",  "pad"};
    TaskSpec t;
    t.task_name = "task " + std::to_string(rng.next_below(10000));
    const std::size_t n = 1 + rng.next_below(5);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        std::string name = words[rng.next_below(words.size())] + " " + std::to_string(i);
        names.push_back(name);
        ObjectSpec o;
        o.object_name = name;
        o.potential_instances = {words[rng.next_below(words.size())]};
        if (rng.next_double() < 0.3) o.appearance_attribute = {"small", "red"};
        if (rng.next_double() < 0.3) o.functional_attribute = {"rigid"};
        if (rng.next_double() < 0.2) o.use_primitive = "cube";
        if (rng.next_double() < 0.2) o.extras["note"] = "extra " + std::to_string(i);
        t.object_list.push_back(o);
    }
    std::string setup = "Place";
    for (const auto& name : names) setup += " the '" + name + "' on the table,";
    t.initial_scene_setup = setup;
    t.task_instruction = "Do the thing.";
    t.task_success_criteria = "the '" + names[0] + "' is still on the table";
    t.potential_solution = "Move the '" + names[0] + "' carefully.";
    t.task_description = "Uses the '" + names[0] + "'.";
    t.category = rng.next_double() < 0.5 ? Category::geometry : Category::material;
    if (rng.next_double() < 0.5) t.difficulty = 1 + static_cast<int>(rng.next_below(5));
    if (rng.next_double() < 0.3) t.extras["origin"] = "generated";
    return t;
}

}  // namespace

TEST_CASE("legacy document parses with alias merging") {
    TaskSpec t = parse_task(legacy_task_text());
    REQUIRE(t.object_list.size() == 3);
    CHECK(t.object_list[0].object_name == "a large ball");
    CHECK(t.object_list[1].object_name == "a short base block");
    CHECK(t.object_list[2].object_name == "a long flat board");

    // geometric_attribute folds into appearance, material_attribute into functional
    const auto& ball = t.object_list[0];
    CHECK(ball.appearance_attribute == std::vector<std::string>{"relatively large", "smooth"});
    REQUIRE(ball.functional_attribute.size() == 4);
    CHECK(ball.functional_attribute[2] == "rigid");
    CHECK(ball.functional_attribute[3] == "heavy");

    // example_objects stands in for potential_instances
    CHECK(ball.potential_instances.size() == 3);
    CHECK(!ball.use_primitive.has_value());
    CHECK(!ball.asset_id.has_value());

    // unknown keys survive in extras
    CHECK(ball.extras["shape"] == "sphere");
    CHECK(ball.extras["material"] == "rigid");

    // legacy document has no success criteria
    CHECK(t.task_success_criteria.empty());
}

TEST_CASE("empty document fails at /task_name") {
    try {
        parse_task("{}");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.path == "/task_name");
    }
}

TEST_CASE("malformed JSON raises SyntaxError") {
    CHECK_THROWS_AS(parse_task("{ nope"), SyntaxError);
}

TEST_CASE("assed_id alias binds asset_id") {
    json doc = to_json(small_task());
    doc["object_list"][0].erase("asset_id");
    doc["object_list"][0]["assed_id"] = "assets/thing.glb";
    TaskSpec t = parse_task_json(doc);
    REQUIRE(t.object_list[0].asset_id.has_value());
    CHECK(*t.object_list[0].asset_id == "assets/thing.glb");

    // round trip normalizes the alias away
    TaskSpec again = parse_task(canonical_json(t));
    CHECK(again == t);
}

TEST_CASE("asset_id and its alias both bound is a SchemaError") {
    json doc = to_json(small_task());
    doc["object_list"][0]["asset_id"] = "a.glb";
    doc["object_list"][0]["assed_id"] = "b.glb";
    CHECK_THROWS_AS(parse_task_json(doc), SchemaError);
}

TEST_CASE("wrong types carry pointer paths") {
    json doc = to_json(small_task());
    doc["task_name"] = 42;
    try {
        parse_task_json(doc);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.path == "/task_name");
    }
}

TEST_CASE("duplicate object names are flagged") {
    TaskSpec t = small_task();
    t.object_list[1].object_name = "cube";
    t.task_success_criteria = "the 'cube' is on the table";
    t.initial_scene_setup = "Two 'cube' objects.";
    t.potential_solution = "n/a";
    t.task_description = "n/a";
    const auto outcome = validate_task(t);
    REQUIRE(outcome.violations.size() == 1);
    CHECK(outcome.violations[0].code == codes::kDuplicateName);
    CHECK(outcome.violations[0].severity == Severity::error);
}

TEST_CASE("reserved tokens in object names are errors") {
    TaskSpec t = small_task();
    t.object_list[0].object_name = "trap lever";
    const auto outcome = validate_task(t);
    bool found = false;
    for (const auto& v : outcome.violations) {
        if (v.code == codes::kReservedToken) found = true;
    }
    CHECK(found);
    CHECK(!outcome.error_free());
}

TEST_CASE("validating the legacy document yields three article warnings and no errors") {
    TaskSpec t = parse_task(legacy_task_text());
    const auto outcome = validate_task(t);
    int articles = 0;
    for (const auto& v : outcome.violations) {
        CHECK(v.code == codes::kArticleToken);
        CHECK(v.severity == Severity::warning);
        ++articles;
    }
    CHECK(articles == 3);
    CHECK(outcome.error_free());
    CHECK(!outcome.ok());

    // frozen golden outcome
    json got = json::array();
    for (const auto& v : outcome.violations) {
        got.push_back({{"code", v.code},
                       {"severity", v.severity == Severity::error ? "error" : "warning"},
                       {"path", v.path}});
    }
    const json want =
        json::parse(read_file(wftest::test_data_dir() + "/golden/legacy_task_validation.json"));
    CHECK(got == want);
}

TEST_CASE("article severity is configurable") {
    TaskSpec t = parse_task(legacy_task_text());
    ValidationOptions opts;
    opts.article_severity = Severity::error;
    CHECK(!validate_task(t, opts).error_free());

    ValidationOptions overridden;
    overridden.severity_overrides[codes::kArticleToken] = Severity::error;
    CHECK(!validate_task(t, overridden).error_free());
}

TEST_CASE("missing instances only matters without an asset binding") {
    TaskSpec t = small_task();
    t.object_list[0].potential_instances.clear();
    auto outcome = validate_task(t);
    REQUIRE(outcome.violations.size() == 1);
    CHECK(outcome.violations[0].code == codes::kMissingInstances);

    t.object_list[0].use_primitive = "cube";
    CHECK(validate_task(t).ok());
}

TEST_CASE("both asset fields set is flagged") {
    TaskSpec t = small_task();
    t.object_list[0].use_primitive = "cube";
    t.object_list[0].asset_id = "x.glb";
    const auto outcome = validate_task(t);
    REQUIRE(outcome.violations.size() == 1);
    CHECK(outcome.violations[0].code == codes::kBothAssetFields);
}

TEST_CASE("difficulty range is checked") {
    TaskSpec t = small_task();
    t.difficulty = 9;
    const auto outcome = validate_task(t);
    REQUIRE(outcome.violations.size() == 1);
    CHECK(outcome.violations[0].code == codes::kRangeDifficulty);
}

TEST_CASE("success criteria requirement is opt-in") {
    TaskSpec t = small_task();
    t.task_success_criteria.clear();
    CHECK(validate_task(t).ok());
    ValidationOptions opts;
    opts.require_success_criteria = true;
    CHECK(!validate_task(t, opts).error_free());
}

TEST_CASE("validation is pure") {
    TaskSpec t = parse_task(legacy_task_text());
    const auto a = validate_task(t);
    const auto b = validate_task(t);
    REQUIRE(a.violations.size() == b.violations.size());
    for (std::size_t i = 0; i < a.violations.size(); ++i) {
        CHECK(a.violations[i].code == b.violations[i].code);
        CHECK(a.violations[i].path == b.violations[i].path);
    }
}

TEST_CASE("canonical serialization is byte-stable and key-order independent") {
    TaskSpec t = parse_task(legacy_task_text());
    const std::string first = canonical_json(t);
    const std::string second = canonical_json(parse_task(first));
    CHECK(first == second);

    // reordering wire keys does not change the canonical form
    json doc = json::parse(legacy_task_text());
    json shuffled = json::object();
    std::vector<std::string> keys;
    for (const auto& [k, v] : doc.items()) keys.push_back(k);
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) shuffled[*it] = doc[*it];
    CHECK(canonical_json(parse_task_json(shuffled)) == first);
}

TEST_CASE("round-trip fixpoint on random tasks") {
    Rng rng(424242);
    for (int i = 0; i < 100; ++i) {
        TaskSpec t = random_task(rng);
        TaskSpec back = parse_task(canonical_json(t));
        CHECK(back == t);
        CHECK(canonical_json(back) == canonical_json(t));
    }
}

TEST_CASE("quoted-name extraction ignores contractions and unquoted text") {
    const auto names =
        extract_quoted_names("The robot's gripper can't reach the 'bank card' under the 'block'.");
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "bank card");
    CHECK(names[1] == "block");

    CHECK(extract_quoted_names("no quotes at all").empty());
}

TEST_CASE("referenced names deduplicate across fields") {
    TaskSpec t = small_task();
    const auto names = referenced_object_names(t);
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "cube");
    CHECK(names[1] == "target_area");
}

TEST_CASE("token matching respects word boundaries") {
    CHECK(name_contains_token("a large ball", "a"));
    CHECK(!name_contains_token("ball", "a"));
    CHECK(!name_contains_token("trapezoid block", "trap"));
    CHECK(name_contains_token("Trap Lever", "trap"));
}
