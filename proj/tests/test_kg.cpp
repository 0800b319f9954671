#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "opsqa/csv.hpp"
#include "opsqa/kg.hpp"

using namespace opsqa;

namespace {

const char* kFixture = OPSQA_DATA_DIR "/fmea_kg.jsonl";

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = std::string("/tmp/opsqa_kg_") + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("bundled fixture loads with the published shape") {
    KnowledgeGraph kg = load_kg(kFixture);
    ValidationReport report = kg.validate();
    CHECK(report.entity_count == 210);
    CHECK(report.relation_count == 1004);
    CHECK(report.dangling.empty());
    CHECK(report.duplicate_ids.empty());
    CHECK(report.cycle_warnings.empty());

    std::size_t failure_modes = 0;
    std::size_t categories = 0;
    for (const auto& e : kg.entities()) {
        if (e.kind == EntityKind::failure_mode) ++failure_modes;
        if (e.kind == EntityKind::asset_category) ++categories;
    }
    CHECK(failure_modes == 63);
    CHECK(categories == 9);
}

TEST_CASE("empty graph is valid") {
    auto path = write_temp("empty.jsonl", "");
    KnowledgeGraph kg = load_kg(path);
    ValidationReport report = kg.validate();
    CHECK(report.entity_count == 0);
    CHECK(report.relation_count == 0);
    CHECK(report.dangling.empty());
}

TEST_CASE("relation to a missing id fails naming the id") {
    auto path = write_temp(
        "ghost.jsonl",
        R"({"record":"entity","id":"a","kind":"sensor","name":"a","attributes":{}})"
        "\n"
        R"({"record":"relation","subject":"a","predicate":"affects","object":"ghost"})"
        "\n");
    CHECK_THROWS_WITH_AS(load_kg(path), doctest::Contains("ghost"), ParseError);
}

TEST_CASE("duplicate entity ids and unknown kinds are load errors") {
    auto dup = write_temp(
        "dup.jsonl",
        R"({"record":"entity","id":"a","kind":"sensor","name":"a"})"
        "\n"
        R"({"record":"entity","id":"a","kind":"sensor","name":"a2"})"
        "\n");
    CHECK_THROWS_WITH_AS(load_kg(dup), doctest::Contains("duplicate"), ParseError);

    auto bad = write_temp("kind.jsonl",
                          R"({"record":"entity","id":"a","kind":"widget","name":"a"})"
                          "\n");
    CHECK_THROWS_WITH_AS(load_kg(bad), doctest::Contains("widget"), ParseError);
}

TEST_CASE("failure profiles carry the pinned PdM metadata") {
    KnowledgeGraph kg = load_kg(kFixture);

    auto comp3 = kg.failure_profile("comp3", "model1");
    REQUIRE(comp3.has_value());
    CHECK(comp3->severity == Severity::very_high);
    REQUIRE(comp3->associated_sensors.size() == 1);
    CHECK(comp3->associated_sensors[0] == "vibration");

    auto comp4 = kg.failure_profile("comp4");
    REQUIRE(comp4.has_value());
    std::set<std::string> sensors(comp4->associated_sensors.begin(),
                                  comp4->associated_sensors.end());
    CHECK(sensors == std::set<std::string>{"vibration", "rotate"});

    CHECK(!kg.failure_profile("nonexistent_mode").has_value());

    auto via_display = kg.failure_profile("Rotor / bearing vibration fault");
    REQUIRE(via_display.has_value());
    CHECK(via_display->failure_label == comp3->failure_label);
}

TEST_CASE("normalize_label folds, resolves synonyms, and is idempotent") {
    KnowledgeGraph kg = load_kg(kFixture);
    CHECK(kg.normalize_label("Comp3 ") == "comp3");
    CHECK(kg.normalize_label("Rotor / bearing vibration fault") == "comp3");
    CHECK(kg.normalize_label("healthy") == "healthy");
    CHECK(kg.normalize_label("Bearing wear fault") == "comp3");  // explicit alias edge

    // idempotence over fixture names and arbitrary strings
    std::vector<std::string> probes = {"Comp3 ", "Rotor / bearing vibration fault", "healthy",
                                       "  WeIrD LaBeL  ", "comp4", "AIR"};
    for (const auto& e : kg.entities()) probes.push_back(e.name);
    for (const auto& p : probes) {
        std::string once = kg.normalize_label(p);
        CHECK(kg.normalize_label(once) == once);
    }
}

TEST_CASE("every failure profile's label is fixed under normalize_label") {
    KnowledgeGraph kg = load_kg(kFixture);
    for (const auto& e : kg.entities()) {
        if (e.kind != EntityKind::failure_mode) continue;
        auto profile = kg.failure_profile(e.id);
        REQUIRE(profile.has_value());
        CHECK(kg.normalize_label(profile->failure_label) == profile->failure_label);
    }
}

TEST_CASE("save/load round trip preserves the entity and relation multiset") {
    KnowledgeGraph kg = load_kg(kFixture);
    auto path = write_temp("roundtrip.jsonl", "");
    kg.save(path);
    KnowledgeGraph again = load_kg(path);

    REQUIRE(again.entities().size() == kg.entities().size());
    REQUIRE(again.relations().size() == kg.relations().size());
    for (std::size_t i = 0; i < kg.entities().size(); ++i) {
        CHECK(again.entities()[i].id == kg.entities()[i].id);
        CHECK(again.entities()[i].attributes == kg.entities()[i].attributes);
    }
    for (std::size_t i = 0; i < kg.relations().size(); ++i) {
        CHECK(again.relations()[i].subject == kg.relations()[i].subject);
        CHECK(again.relations()[i].predicate_text == kg.relations()[i].predicate_text);
        CHECK(again.relations()[i].object == kg.relations()[i].object);
    }
}

TEST_CASE("load is order independent") {
    std::ifstream in(kFixture);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    std::mt19937 rng(42);
    std::shuffle(lines.begin(), lines.end(), rng);
    std::ostringstream shuffled;
    for (const auto& l : lines) shuffled << l << "\n";
    auto path = write_temp("shuffled.jsonl", shuffled.str());

    KnowledgeGraph a = load_kg(kFixture);
    KnowledgeGraph b = load_kg(path);
    REQUIRE(a.entities().size() == b.entities().size());
    for (std::size_t i = 0; i < a.entities().size(); ++i)
        CHECK(a.entities()[i].id == b.entities()[i].id);
    REQUIRE(a.relations().size() == b.relations().size());
    for (std::size_t i = 0; i < a.relations().size(); ++i) {
        CHECK(a.relations()[i].subject == b.relations()[i].subject);
        CHECK(a.relations()[i].object == b.relations()[i].object);
    }
}

TEST_CASE("self-loop component_of edge is flagged as a cycle") {
    auto path = write_temp(
        "selfloop.jsonl",
        R"({"record":"entity","id":"a","kind":"component","name":"a"})"
        "\n"
        R"({"record":"relation","subject":"a","predicate":"component_of","object":"a"})"
        "\n");
    KnowledgeGraph kg = load_kg(path);
    ValidationReport report = kg.validate();
    REQUIRE(report.cycle_warnings.size() == 1);
    CHECK(report.cycle_warnings[0].find("a") != std::string::npos);
}

TEST_CASE("dropping entities reports exactly the relations touching them") {
    KnowledgeGraph kg = load_kg(kFixture);

    // deterministically drop 5 entities that participate in relations
    std::set<std::string> used;
    for (const auto& r : kg.relations()) {
        used.insert(r.subject);
        if (predicate_object_is_id(r)) used.insert(r.object);
    }
    std::vector<std::string> candidates(used.begin(), used.end());
    std::mt19937 rng(7);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::set<std::string> dropped(candidates.begin(), candidates.begin() + 5);

    std::vector<KgEntity> entities;
    for (const auto& e : kg.entities())
        if (!dropped.count(e.id)) entities.push_back(e);
    KnowledgeGraph pruned(entities, kg.relations());

    // brute-force oracle over edge endpoints
    std::set<std::string> remaining;
    for (const auto& e : entities) remaining.insert(e.id);
    std::size_t expected = 0;
    for (const auto& r : kg.relations()) {
        bool bad = !remaining.count(r.subject) ||
                   (predicate_object_is_id(r) && !remaining.count(r.object));
        if (bad) ++expected;
    }
    REQUIRE(expected > 0);

    ValidationReport report = pruned.validate();
    CHECK(report.dangling.size() == expected);
}

TEST_CASE("unknown predicates are preserved as other") {
    auto path = write_temp(
        "other.jsonl",
        R"({"record":"entity","id":"a","kind":"failure_mode","name":"a","attributes":{"severity":"low"}})"
        "\n"
        R"({"record":"relation","subject":"a","predicate":"correlates_with","object":"free text"})"
        "\n");
    KnowledgeGraph kg = load_kg(path);
    REQUIRE(kg.relations().size() == 1);
    CHECK(kg.relations()[0].predicate == Predicate::other);
    CHECK(kg.relations()[0].predicate_text == "correlates_with");
}

TEST_CASE("asset profile and sensor descriptions resolve from the fixture") {
    KnowledgeGraph kg = load_kg(kFixture);
    auto asset = kg.asset_profile("model1");
    REQUIRE(asset.has_value());
    CHECK(asset->equipment_category == "rotating_equipment");
    CHECK(asset->equipment_class_type == "electric_motor_driven_rotating_machine");
    CHECK(asset->unit_subunit == std::vector<std::string>{"rotor", "bearings", "coupling"});

    auto desc = kg.sensor_description("vibration");
    REQUIRE(desc.has_value());
    CHECK(desc->find("Vibration sensors monitor machinery") == 0);
}
