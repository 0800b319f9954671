#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "opsqa/csv.hpp"
#include "opsqa/extractor.hpp"
#include "opsqa/risk.hpp"
#include "opsqa/rng.hpp"
#include "opsqa/synth.hpp"

using namespace opsqa;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

SyntheticSpec small_spec(std::uint64_t seed = 7) {
    SyntheticSpec spec;
    spec.n_machines = 6;
    spec.hours = 1200;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("synthetic tables carry the PdM schema") {
    std::filesystem::create_directories("/tmp/opsqa_synth_schema");
    auto paths = generate_synthetic(small_spec(), "/tmp/opsqa_synth_schema");
    CsvTable t = read_csv(paths.telemetry);
    CHECK(t.header == std::vector<std::string>{"datetime", "machineID", "volt", "rotate",
                                               "pressure", "vibration"});
    CHECK(read_csv(paths.failures).header ==
          std::vector<std::string>{"datetime", "machineID", "failure"});
    CHECK(read_csv(paths.errors).header ==
          std::vector<std::string>{"datetime", "machineID", "errorID"});
    CHECK(read_csv(paths.maint).header ==
          std::vector<std::string>{"datetime", "machineID", "comp"});
    CHECK(read_csv(paths.machines).header ==
          std::vector<std::string>{"machineID", "model", "age"});
    CHECK(t.rows.size() == 6 * 1200);
}

TEST_CASE("same seed gives byte-identical tables; different seed differs") {
    std::filesystem::create_directories("/tmp/opsqa_synth_a");
    std::filesystem::create_directories("/tmp/opsqa_synth_b");
    std::filesystem::create_directories("/tmp/opsqa_synth_c");
    auto a = generate_synthetic(small_spec(7), "/tmp/opsqa_synth_a");
    auto b = generate_synthetic(small_spec(7), "/tmp/opsqa_synth_b");
    auto c = generate_synthetic(small_spec(8), "/tmp/opsqa_synth_c");
    CHECK(slurp(a.telemetry) == slurp(b.telemetry));
    CHECK(slurp(a.failures) == slurp(b.failures));
    CHECK(slurp(a.maint) == slurp(b.maint));
    CHECK(slurp(a.telemetry) != slurp(c.telemetry));
}

TEST_CASE("failures exist for every component and follow the threshold rule") {
    std::filesystem::create_directories("/tmp/opsqa_synth_fail");
    SyntheticSpec spec = small_spec();
    auto paths = generate_synthetic(spec, "/tmp/opsqa_synth_fail");
    CsvTable failures = read_csv(paths.failures);
    REQUIRE(!failures.rows.empty());
    std::map<std::string, int> per_comp;
    for (const auto& row : failures.rows) ++per_comp[row[2]];
    for (const auto& comp : spec.components) CHECK(per_comp[comp.name] > 0);
}

TEST_CASE("longer time since maintenance raises empirical failure frequency") {
    // bucket hours-since-maint at failure facts vs healthy facts
    std::filesystem::create_directories("/tmp/opsqa_synth_mono");
    SyntheticSpec spec;
    spec.n_machines = 10;
    spec.hours = 1500;
    spec.seed = 21;
    auto paths = generate_synthetic(spec, "/tmp/opsqa_synth_mono");
    RawTables tables = load_tables(paths.telemetry, paths.failures, paths.errors, paths.maint,
                                   paths.machines);
    ExtractorConfig cfg;
    cfg.max_healthy_per_machine = 30;
    auto facts = run_extraction(tables, cfg);

    // empirical check per component: mean recency at failure windows is well
    // above mean recency at healthy windows
    for (const auto& comp : spec.components) {
        double fail_sum = 0, fail_n = 0, healthy_sum = 0, healthy_n = 0;
        for (const auto& fact : facts) {
            auto v = fact.feature("hours_since_last_maint_" + comp.name);
            if (!v || *v < 0) continue;
            if (fact.label == comp.name) {
                fail_sum += *v;
                fail_n += 1;
            } else if (fact.label == "healthy") {
                healthy_sum += *v;
                healthy_n += 1;
            }
        }
        REQUIRE(fail_n > 0);
        REQUIRE(healthy_n > 0);
        CHECK(fail_sum / fail_n > healthy_sum / healthy_n);
    }

    // and the trained model's risk is non-decreasing in maintenance recency
    // for >= 95% of random contexts (finite perturbation)
    RiskModel model = train_risk_model(facts);
    SplitMix64 rng(404);
    int ok = 0, total = 0;
    std::vector<const EpisodeFact*> pool;
    for (const auto& f : facts) pool.push_back(&f);
    for (int trial = 0; trial < 200; ++trial) {
        const EpisodeFact& base = *pool[rng.below(pool.size())];
        const auto& comp = spec.components[rng.below(spec.components.size())];
        std::string feature = "hours_since_last_maint_" + comp.name;
        auto current = base.feature(feature);
        if (!current || *current < 0) continue;
        auto lower = model.simulate_intervention(base, {{feature, *current * 0.5}});
        auto higher = model.simulate_intervention(base, {{feature, *current * 1.5}});
        ++total;
        if (higher.risk_after >= lower.risk_after - 1e-9) ++ok;
    }
    REQUIRE(total >= 100);
    CHECK(static_cast<double>(ok) / total >= 0.95);
}

TEST_CASE("maintenance reset lowers model risk on most synthetic failure windows") {
    std::filesystem::create_directories("/tmp/opsqa_synth_cf");
    SyntheticSpec spec;
    spec.n_machines = 8;
    spec.hours = 1500;
    spec.seed = 5;
    auto paths = generate_synthetic(spec, "/tmp/opsqa_synth_cf");
    RawTables tables = load_tables(paths.telemetry, paths.failures, paths.errors, paths.maint,
                                   paths.machines);
    ExtractorConfig cfg;
    cfg.max_healthy_per_machine = 40;
    auto facts = run_extraction(tables, cfg);
    RiskModel model = train_risk_model(facts);

    int decrease = 0, total = 0;
    for (const auto& fact : facts) {
        if (!fact.failure_window || !fact.failure_component) continue;
        std::string feature = "hours_since_last_maint_" + *fact.failure_component;
        if (!fact.feature(feature)) continue;
        auto cf = model.simulate_intervention(fact, {{feature, 0.0}});
        ++total;
        if (cf.direction == RiskDirection::decrease) ++decrease;
    }
    REQUIRE(total >= 50);
    CHECK(static_cast<double>(decrease) / total >= 0.95);
}
