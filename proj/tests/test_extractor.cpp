#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "opsqa/csv.hpp"
#include "opsqa/extractor.hpp"
#include "opsqa/kg.hpp"

using namespace opsqa;

namespace {

const char* kFixtureDir = OPSQA_DATA_DIR "/pdm_fixture";
const char* kKgFixture = OPSQA_DATA_DIR "/fmea_kg.jsonl";

RawTables load_fixture() {
    std::string dir = kFixtureDir;
    return load_tables(dir + "/PdM_telemetry.csv", dir + "/PdM_failures.csv",
                       dir + "/PdM_errors.csv", dir + "/PdM_maint.csv",
                       dir + "/PdM_machines.csv");
}

// Test-side recomputation of window aggregates straight from the CSV text,
// independent of the extractor's code path.
struct OracleAggregates {
    double mean = 0, stdev = 0, lo = 0, hi = 0, slope = 0;
    int count = 0;
};

OracleAggregates oracle_window(const std::string& telemetry_csv, std::int64_t machine,
                               const std::string& column, const std::string& start_exclusive,
                               const std::string& end_inclusive) {
    CsvTable t = read_csv(telemetry_csv);
    auto c_time = t.column("datetime");
    auto c_machine = t.column("machineID");
    auto c_val = t.column(column);
    Timestamp ws = *parse_timestamp(start_exclusive);
    Timestamp we = *parse_timestamp(end_inclusive);

    std::vector<std::pair<Timestamp, double>> rows;
    for (const auto& row : t.rows) {
        if (std::stoll(row[c_machine]) != machine) continue;
        Timestamp ts = *parse_timestamp(row[c_time]);
        if (ts <= ws || ts > we) continue;
        rows.emplace_back(ts, std::stod(row[c_val]));
    }
    std::sort(rows.begin(), rows.end());

    OracleAggregates out;
    out.count = static_cast<int>(rows.size());
    if (rows.empty()) return out;
    double sum = 0;
    out.lo = out.hi = rows[0].second;
    for (auto& [_, v] : rows) {
        sum += v;
        out.lo = std::min(out.lo, v);
        out.hi = std::max(out.hi, v);
    }
    out.mean = sum / rows.size();
    double ss = 0;
    for (auto& [_, v] : rows) ss += (v - out.mean) * (v - out.mean);
    out.stdev = std::sqrt(ss / rows.size());
    double n = static_cast<double>(rows.size());
    double xbar = (n - 1) / 2.0;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        sxy += (i - xbar) * (rows[i].second - out.mean);
        sxx += (i - xbar) * (i - xbar);
    }
    out.slope = sxx > 0 ? sxy / sxx : 0;
    return out;
}

bool rel_close(double a, double b, double tol = 1e-9) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("sensor descriptors on simple series") {
    SUBCASE("constant series") {
        std::vector<std::pair<Timestamp, double>> s = {{0, 5}, {3600, 5}, {7200, 5}, {10800, 5}};
        auto d = sensor_descriptors(s);
        CHECK(*d.mean == 5.0);
        CHECK(*d.std == 0.0);
        CHECK(*d.min == 5.0);
        CHECK(*d.max == 5.0);
        CHECK(*d.trend == 0.0);
    }
    SUBCASE("unit ramp has unit slope (closed-form least squares)") {
        std::vector<std::pair<Timestamp, double>> s = {{0, 0}, {3600, 1}, {7200, 2}, {10800, 3}};
        auto d = sensor_descriptors(s);
        CHECK(*d.trend == doctest::Approx(1.0));
        CHECK(*d.mean == doctest::Approx(1.5));
    }
    SUBCASE("empty series yields all nulls") {
        auto d = sensor_descriptors({});
        CHECK(!d.mean);
        CHECK(!d.std);
        CHECK(!d.min);
        CHECK(!d.max);
        CHECK(!d.trend);
    }
    SUBCASE("single sample: std 0, trend null") {
        auto d = sensor_descriptors({{0, 7.0}});
        CHECK(*d.mean == 7.0);
        CHECK(*d.std == 0.0);
        CHECK(!d.trend);
    }
}

TEST_CASE("PdM fixture failure row 0 reproduces the reference fact") {
    RawTables tables = load_fixture();
    ExtractorConfig cfg;
    auto facts = extract_failure_episodes(tables, cfg);
    REQUIRE(facts.size() == 2);

    const EpisodeFact* fact = nullptr;
    for (const auto& f : facts)
        if (f.machine_id == 56) fact = &f;
    REQUIRE(fact);

    CHECK(fact->fact_id == "pdm_m56_comp3_2015-01-02T03");
    CHECK(fact->label == "comp3");
    CHECK(fact->asset_id == "machine_56");
    CHECK(format_timestamp(fact->start_time) == "2015-01-01 03:00:00");
    CHECK(format_timestamp(fact->end_time) == "2015-01-02 03:00:00");
    CHECK(fact->provenance.failure_index == 0);
    CHECK(fact->row_index == 0);
    CHECK(fact->provenance.telemetry_points_in_window == 22);
    CHECK(fact->provenance.telemetry_source_file == "PdM_telemetry.csv");

    auto volt_mean = fact->feature("volt_mean");
    REQUIRE(volt_mean.has_value());
    CHECK(std::round(*volt_mean * 1e4) / 1e4 == doctest::Approx(169.0608));
    auto hours = fact->feature("hours_since_last_maint_comp3");
    REQUIRE(hours.has_value());
    CHECK(*hours == doctest::Approx(477.0));
    auto age = fact->feature("machine_age");
    REQUIRE(age.has_value());
    CHECK(*age == 10.0);
    auto model_flag = fact->feature("model_model1");
    REQUIRE(model_flag.has_value());
    CHECK(*model_flag == 1.0);

    // two distinct errors inside the window
    CHECK(*fact->feature("error_count_last_window") == 2.0);
    CHECK(*fact->feature("distinct_error_types_last_window") == 2.0);
}

TEST_CASE("every fixture feature equals the brute-force oracle") {
    RawTables tables = load_fixture();
    ExtractorConfig cfg;
    auto facts = run_extraction(tables, cfg);
    REQUIRE(!facts.empty());

    std::string telemetry = std::string(kFixtureDir) + "/PdM_telemetry.csv";
    for (const auto& fact : facts) {
        for (const std::string col : {"volt", "rotate", "pressure", "vibration"}) {
            auto oracle = oracle_window(telemetry, fact.machine_id, col,
                                        format_timestamp(fact.start_time),
                                        format_timestamp(fact.end_time));
            auto mean = fact.feature(col + "_mean");
            if (oracle.count == 0) {
                CHECK(!mean);
                continue;
            }
            REQUIRE(mean);
            CHECK(rel_close(*mean, oracle.mean));
            CHECK(rel_close(*fact.feature(col + "_std"), oracle.stdev));
            CHECK(rel_close(*fact.feature(col + "_min"), oracle.lo));
            CHECK(rel_close(*fact.feature(col + "_max"), oracle.hi));
            if (oracle.count >= 2) CHECK(rel_close(*fact.feature(col + "_trend"), oracle.slope));
        }
    }
}

TEST_CASE("no failure rows means no failure episodes") {
    RawTables tables = load_fixture();
    tables.failures.clear();
    ExtractorConfig cfg;
    CHECK(extract_failure_episodes(tables, cfg).empty());
}

TEST_CASE("healthy sampling respects the horizon predicate") {
    RawTables tables = load_fixture();
    ExtractorConfig cfg;
    auto healthy = sample_healthy_episodes(tables, cfg);
    REQUIRE(!healthy.empty());
    const Timestamp horizon = static_cast<Timestamp>(cfg.horizon_hours * kSecondsPerHour);
    for (const auto& fact : healthy) {
        CHECK(fact.label == "healthy");
        CHECK(!fact.failure_window);
        auto it = tables.failures.find(fact.machine_id);
        if (it == tables.failures.end()) continue;
        for (const auto& failure : it->second) {
            bool inside = failure.time >= fact.end_time && failure.time <= fact.end_time + horizon;
            CHECK(!inside);
        }
    }
}

TEST_CASE("healthy sampling caps and stride behave deterministically") {
    // machine with no failures and 1000 hourly rows, cap 50 -> exactly 50
    RawTables tables;
    tables.telemetry_file = "synthetic.csv";
    tables.failures_file = "failures.csv";
    tables.errors_file = "errors.csv";
    tables.maint_file = "maint.csv";
    tables.machines_file = "machines.csv";
    tables.sensor_columns = {"volt"};
    Timestamp t0 = *parse_timestamp("2015-01-01 00:00:00");
    for (int i = 0; i < 1000; ++i) {
        TelemetryRow row;
        row.time = t0 + i * kSecondsPerHour;
        row.sensors["volt"] = 100.0 + i * 0.01;
        tables.telemetry[1].push_back(row);
    }
    ExtractorConfig cfg;
    cfg.max_healthy_per_machine = 50;
    auto healthy = sample_healthy_episodes(tables, cfg);
    CHECK(healthy.size() == 50);

    // a failure every horizon/2 hours leaves no acceptable center
    RawTables dense = tables;
    for (int i = 0; i < 90; ++i) {
        FailureRow f;
        f.time = t0 + i * (kSecondsPerHour * 12);
        f.component = "comp1";
        f.index = i;
        dense.failures[1].push_back(f);
    }
    cfg.horizon_hours = 24;
    CHECK(sample_healthy_episodes(dense, cfg).empty());
}

TEST_CASE("window slice matches a hand-built 48h series with one failure") {
    RawTables tables;
    tables.telemetry_file = "t.csv";
    tables.failures_file = "f.csv";
    tables.errors_file = "e.csv";
    tables.maint_file = "m.csv";
    tables.machines_file = "mm.csv";
    tables.sensor_columns = {"volt"};
    Timestamp t0 = *parse_timestamp("2015-01-01 00:00:00");
    for (int i = 1; i <= 48; ++i) {
        TelemetryRow row;
        row.time = t0 + i * kSecondsPerHour;
        row.sensors["volt"] = static_cast<double>(i);  // value == hour index
        tables.telemetry[9].push_back(row);
    }
    FailureRow f;
    f.time = t0 + 48 * kSecondsPerHour;
    f.component = "compX";
    f.index = 0;
    tables.failures[9].push_back(f);

    ExtractorConfig cfg;
    cfg.window_hours = 24;
    auto facts = extract_failure_episodes(tables, cfg);
    REQUIRE(facts.size() == 1);
    // hours 25..48 inclusive -> mean 36.5, min 25, max 48
    CHECK(*facts[0].feature("volt_mean") == doctest::Approx(36.5));
    CHECK(*facts[0].feature("volt_min") == 25.0);
    CHECK(*facts[0].feature("volt_max") == 48.0);
    CHECK(facts[0].provenance.telemetry_points_in_window == 24);
}

TEST_CASE("KG enrichment attaches profiles by label and sensors") {
    RawTables tables = load_fixture();
    KnowledgeGraph kg = load_kg(kKgFixture);
    ExtractorConfig cfg;
    auto facts = run_extraction(tables, cfg, &kg);

    const EpisodeFact* comp3 = nullptr;
    const EpisodeFact* healthy = nullptr;
    for (const auto& f : facts) {
        if (f.label == "comp3") comp3 = &f;
        if (f.label == "healthy" && !healthy) healthy = &f;
    }
    REQUIRE(comp3);
    REQUIRE(healthy);

    REQUIRE(comp3->failure_profile.has_value());
    CHECK(comp3->failure_profile->failure_label == "comp3");
    CHECK(comp3->failure_profile->severity == Severity::very_high);
    REQUIRE(comp3->asset_profile.has_value());
    CHECK(comp3->asset_profile->asset_name == "model1");
    CHECK(comp3->sensor_profiles.size() == 4);

    CHECK(!healthy->failure_profile.has_value());
    CHECK(healthy->asset_profile.has_value());

    // unknown label and unknown model: sensor profiles only
    EpisodeFact orphan = *comp3;
    orphan.label = "mystery_mode";
    orphan.failure_window = true;
    for (auto& feat : orphan.features) {
        if (feat.name == "model_model1") feat.name = "model_model99";
    }
    orphan.asset_profile.reset();
    orphan.failure_profile.reset();
    EpisodeFact enriched = enrich_with_kg(orphan, kg);
    CHECK(!enriched.failure_profile.has_value());
    CHECK(!enriched.asset_profile.has_value());
    CHECK(enriched.sensor_profiles.size() == 4);
}

TEST_CASE("comp4 enrichment carries both indicated sensors") {
    KnowledgeGraph kg = load_kg(kKgFixture);
    EpisodeFact fact;
    fact.fact_id = "pdm_m73_comp4_2015-02-16T06";
    fact.dataset = "pdm";
    fact.label = "comp4";
    fact.failure_component = "comp4";
    fact.failure_window = true;
    fact.features = {{"vibration_mean", 49.66, {}}, {"model_model2", 1.0, {}}};
    EpisodeFact enriched = enrich_with_kg(fact, kg);
    REQUIRE(enriched.failure_profile.has_value());
    std::set<std::string> sensors(enriched.failure_profile->associated_sensors.begin(),
                                  enriched.failure_profile->associated_sensors.end());
    CHECK(sensors == std::set<std::string>{"vibration", "rotate"});
    REQUIRE(enriched.asset_profile.has_value());
    CHECK(enriched.asset_profile->asset_name == "model2");
}

TEST_CASE("extraction output is byte-deterministic") {
    RawTables tables = load_fixture();
    ExtractorConfig cfg;
    auto facts = run_extraction(tables, cfg);
    write_facts_jsonl(facts, "/tmp/opsqa_facts_a.jsonl");
    auto facts2 = run_extraction(load_fixture(), cfg);
    write_facts_jsonl(facts2, "/tmp/opsqa_facts_b.jsonl");

    std::ifstream a("/tmp/opsqa_facts_a.jsonl", std::ios::binary);
    std::ifstream b("/tmp/opsqa_facts_b.jsonl", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
}

TEST_CASE("facts JSONL round trips") {
    RawTables tables = load_fixture();
    KnowledgeGraph kg = load_kg(kKgFixture);
    ExtractorConfig cfg;
    auto facts = run_extraction(tables, cfg, &kg);
    write_facts_jsonl(facts, "/tmp/opsqa_facts_rt.jsonl");
    auto again = read_facts_jsonl("/tmp/opsqa_facts_rt.jsonl");
    REQUIRE(again.size() == facts.size());
    for (std::size_t i = 0; i < facts.size(); ++i) {
        CHECK(again[i].fact_id == facts[i].fact_id);
        CHECK(again[i].label == facts[i].label);
        CHECK(again[i].features.size() == facts[i].features.size());
        CHECK(fact_to_json(again[i]).dump() == fact_to_json(facts[i]).dump());
    }
}

TEST_CASE("one-hot model flags sum to one per fact") {
    RawTables tables = load_fixture();
    ExtractorConfig cfg;
    for (const auto& fact : run_extraction(tables, cfg)) {
        double sum = 0;
        for (const auto& f : fact.features) {
            if (f.name.rfind("model_", 0) == 0 && f.value) sum += *f.value;
        }
        CHECK(sum == 1.0);
    }
}

TEST_CASE("missing column aborts with a locator") {
    std::string dir = kFixtureDir;
    std::string bad = "/tmp/opsqa_bad_telemetry.csv";
    {
        std::ofstream out(bad);
        out << "timestamp,machineID,volt\n2015-01-01 00:00:00,1,100\n";
    }
    CHECK_THROWS_AS(load_tables(bad, dir + "/PdM_failures.csv", dir + "/PdM_errors.csv",
                                dir + "/PdM_maint.csv", dir + "/PdM_machines.csv"),
                    ParseError);
}

TEST_CASE("unparseable timestamp aborts with file and row") {
    std::string dir = kFixtureDir;
    std::string bad = "/tmp/opsqa_bad_time.csv";
    {
        std::ofstream out(bad);
        out << "datetime,machineID,volt\nyesterday,1,100\n";
    }
    try {
        load_tables(bad, dir + "/PdM_failures.csv", dir + "/PdM_errors.csv",
                    dir + "/PdM_maint.csv", dir + "/PdM_machines.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("yesterday") != std::string::npos);
    }
}
