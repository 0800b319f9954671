#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "opsqa/extractor.hpp"
#include "opsqa/metrics.hpp"
#include "opsqa/pipeline.hpp"
#include "opsqa/rng.hpp"

using namespace opsqa;

namespace {

const char* kFixtureDir = OPSQA_DATA_DIR "/pdm_fixture";
const char* kKgFixture = OPSQA_DATA_DIR "/fmea_kg.jsonl";

struct Env {
    KnowledgeGraph kg;
    std::vector<EpisodeFact> facts;
    RiskModel model;
    std::vector<QAInstance> corpus;
    std::unique_ptr<EpisodicStore> store;
};

Env& env() {
    static Env e = [] {
        Env out;
        out.kg = load_kg(kKgFixture);
        std::string dir = kFixtureDir;
        RawTables tables = load_tables(dir + "/PdM_telemetry.csv", dir + "/PdM_failures.csv",
                                       dir + "/PdM_errors.csv", dir + "/PdM_maint.csv",
                                       dir + "/PdM_machines.csv");
        out.facts = run_extraction(tables, ExtractorConfig{}, &out.kg);
        out.model = train_risk_model(out.facts);
        out.corpus = build_corpus(out.facts, out.kg, &out.model,
                                  {TaskType::descriptive, TaskType::temporal_count,
                                   TaskType::diagnostic, TaskType::counterfactual,
                                   TaskType::action_recommendation},
                                  ActionPolicy{});
        std::remove("/tmp/opsqa_metrics_env.db");
        out.store = std::make_unique<EpisodicStore>("/tmp/opsqa_metrics_env.db");
        for (const auto& f : out.facts) out.store->upsert_fact(f);
        return out;
    }();
    return e;
}

// Brute-force exact two-sided binomial tail for the McNemar oracle.
double binom_two_sided(std::int64_t b, std::int64_t c) {
    const std::int64_t n = b + c;
    const std::int64_t k = std::min(b, c);
    long double tail = 0.0L;
    for (std::int64_t i = 0; i <= k; ++i) {
        // C(n, i) by direct product
        long double coeff = 1.0L;
        for (std::int64_t j = 1; j <= i; ++j)
            coeff = coeff * static_cast<long double>(n - j + 1) / static_cast<long double>(j);
        tail += coeff * std::pow(0.5L, static_cast<long double>(n));
    }
    return static_cast<double>(std::min(1.0L, 2.0L * tail));
}

}  // namespace

TEST_CASE("numeric claims are extracted from diagnostic-style reasoning") {
    auto claims = extract_claims("key observed features: volt_mean=169.061, volt_std=17.856.");
    REQUIRE(claims.size() == 2);
    CHECK(claims[0].subject == "volt_mean");
    CHECK(claims[0].value == doctest::Approx(169.061));
    CHECK(claims[1].subject == "volt_std");

    CHECK(extract_claims("Nothing quantitative here, just words.").empty());
    // prose words without underscores carry no claim
    CHECK(extract_claims("threshold=0.50 is the policy").empty());
}

TEST_CASE("relation claims verify against the KG") {
    Env& e = env();
    auto claims = extract_claims("vibration indicates Rotor / bearing vibration fault.");
    REQUIRE(claims.size() == 1);
    CHECK(claims[0].kind == AtomicClaim::Kind::relation);
    CHECK(claims[0].subject == "vibration");
    CHECK(claims[0].object == "Rotor / bearing vibration fault");

    // score it through a constructed instance
    const QAInstance* diag = nullptr;
    for (const auto& qa : e.corpus)
        if (qa.task_type == TaskType::diagnostic && qa.label == "comp3") diag = &qa;
    REQUIRE(diag);
    auto fact = e.store->get_fact(diag->fact_id);

    nlohmann::ordered_json j = oracle_answer_json(*diag);
    j["reasoning_answer"] = "vibration indicates Rotor / bearing vibration fault.";
    auto parsed = parse_answer(j.dump());
    VerifierReport report = verify(parsed, *diag, *e.store, e.kg);
    LexicalEntailmentJudge judge;
    auto record = score_instance(parsed, *diag, report, &*fact, e.kg, judge, {});
    REQUIRE(record.claim_precision.has_value());
    CHECK(*record.claim_precision == 1.0);

    // a wrong relation drops precision to zero
    j["reasoning_answer"] = "volt indicates Rotor / bearing vibration fault.";
    parsed = parse_answer(j.dump());
    record = score_instance(parsed, *diag, report, &*fact, e.kg, judge, {});
    REQUIRE(record.claim_precision.has_value());
    CHECK(*record.claim_precision == 0.0);
}

TEST_CASE("claim precision checks numeric values against the fact") {
    Env& e = env();
    const QAInstance* diag = nullptr;
    for (const auto& qa : e.corpus)
        if (qa.task_type == TaskType::diagnostic && qa.label == "comp3") diag = &qa;
    REQUIRE(diag);
    auto fact = e.store->get_fact(diag->fact_id);
    REQUIRE(std::abs(*fact->feature("pressure_mean") - 124.67) < 0.01);

    LexicalEntailmentJudge judge;
    nlohmann::ordered_json j = oracle_answer_json(*diag);
    j["reasoning_answer"] = "pressure_mean=999 is alarming.";
    auto parsed = parse_answer(j.dump());
    VerifierReport report = verify(parsed, *diag, *e.store, e.kg);
    auto record = score_instance(parsed, *diag, report, &*fact, e.kg, judge, {});
    REQUIRE(record.claim_precision.has_value());
    CHECK(*record.claim_precision == 0.0);

    j["reasoning_answer"] = "pressure_mean=124.67 as recorded.";
    parsed = parse_answer(j.dump());
    record = score_instance(parsed, *diag, report, &*fact, e.kg, judge, {});
    CHECK(*record.claim_precision == 1.0);

    // no recognizable pattern: precision is null, not zero
    j["reasoning_answer"] = "All readings look consistent with wear.";
    parsed = parse_answer(j.dump());
    record = score_instance(parsed, *diag, report, &*fact, e.kg, judge, {});
    CHECK(!record.claim_precision.has_value());
}

TEST_CASE("numeric claim tolerance is max(1e-6, 1e-3 relative)") {
    CHECK(numeric_claim_matches(169.061, 169.0608));
    CHECK(numeric_claim_matches(0.2177, 0.2177));
    CHECK(!numeric_claim_matches(999.0, 124.67));
    CHECK(numeric_claim_matches(1e-9, 0.0));
    CHECK(!numeric_claim_matches(0.002, 0.001));
}

TEST_CASE("sentence splitting follows the documented rule") {
    auto s = split_sentences("First point. Second point! Third? 4th and last.");
    REQUIRE(s.size() == 4);
    CHECK(s[0] == "First point.");
    CHECK(s[3] == "4th and last.");

    // decimal points do not split
    auto t = split_sentences("volt_mean is 169.061 overall. Next sentence.");
    REQUIRE(t.size() == 2);

    // lowercase after a period does not split
    auto u = split_sentences("e.g. something like this.");
    CHECK(u.size() == 1);
}

TEST_CASE("lexical judge scores verbatim, disjoint, and half-overlapping sentences") {
    LexicalEntailmentJudge judge;
    std::vector<std::string> evidence = {"fact_id: abc\nvolt_mean: 169.061\nasset: machine_56"};
    CHECK(judge.score("volt_mean: 169.061 machine_56 abc fact_id asset", evidence) == 1.0);
    CHECK(judge.score("zebra quantum firmware", evidence) == 0.0);
    // content tokens: volt_mean 169.061 zebra quantum -> 2 of 4 present
    CHECK(judge.score("volt_mean 169.061 zebra quantum", evidence) == doctest::Approx(0.5));
}

TEST_CASE("mcnemar: symmetric counts give p = 1") {
    CHECK(mcnemar_test(0, 0) == 1.0);
    CHECK(mcnemar_test(5, 5) == doctest::Approx(1.0));
    CHECK(mcnemar_test(12, 12) == doctest::Approx(1.0));
}

TEST_CASE("mcnemar: exact branch matches the brute-force binomial oracle") {
    CHECK(mcnemar_test(15, 5) == doctest::Approx(binom_two_sided(15, 5)).epsilon(1e-10));
    CHECK(mcnemar_test(15, 5) == doctest::Approx(0.041389465).epsilon(1e-6));
    for (std::int64_t b = 0; b <= 12; ++b) {
        for (std::int64_t c = 0; c <= 12; ++c) {
            if (b + c == 0) continue;
            CHECK(mcnemar_test(b, c) == doctest::Approx(binom_two_sided(b, c)).epsilon(1e-10));
        }
    }
}

TEST_CASE("mcnemar: large-sample branch uses the corrected chi-square") {
    // (|100-60|-1)^2/160 = 9.50625 -> p ~ 0.002
    double p = mcnemar_test(100, 60);
    CHECK(p < 0.05);
    CHECK(p == doctest::Approx(std::erfc(std::sqrt(9.50625 / 2.0))).epsilon(1e-12));
}

TEST_CASE("mcnemar is symmetric over random pairs") {
    SplitMix64 rng(500);
    for (int i = 0; i < 100; ++i) {
        std::int64_t b = static_cast<std::int64_t>(rng.below(200));
        std::int64_t c = static_cast<std::int64_t>(rng.below(200));
        CHECK(mcnemar_test(b, c) == mcnemar_test(c, b));
    }
}

TEST_CASE("full_pass is the mean of the three booleans over diagnostic instances") {
    std::vector<MetricRecord> records;
    MetricRecord a;
    a.qa_id = "a";
    a.task_type = TaskType::diagnostic;
    a.struct_ok = true;
    a.prov_ok = true;
    a.label_consistent = true;
    records.push_back(a);
    MetricRecord b = a;
    b.qa_id = "b";
    b.prov_ok = false;          // (1+0+1)/3
    records.push_back(b);
    MetricRecord c = a;
    c.qa_id = "c";
    c.task_type = TaskType::descriptive;  // not in the full-pass denominator
    records.push_back(c);

    auto report = aggregate("test", records);
    CHECK(report.full_pass.count == 2);
    CHECK(report.full_pass.mean == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
    CHECK(report.struct_ok.count == 3);
    CHECK(report.label_consistent.count == 2);
}

TEST_CASE("oracle run_config yields perfect reliability metrics") {
    Env& e = env();
    OracleBackend oracle(*e.store, e.kg, &e.model);
    auto preset = *preset_by_name("full");
    RunResult result = run_config(e.corpus, *e.store, e.kg, &e.model, oracle, preset);
    CHECK(result.report.struct_ok.mean == 1.0);
    CHECK(result.report.prov_ok.mean == 1.0);
    CHECK(result.report.label_consistent.mean == 1.0);
    CHECK(result.report.cf_direction_ok.mean == 1.0);
    CHECK(result.report.temporal_ok.mean == 1.0);
    CHECK(result.report.full_pass.mean == 1.0);
}

TEST_CASE("fault rate shows up in Prov.OK within binomial noise") {
    Env& e = env();
    const double rate = 0.3;
    auto inner = std::make_unique<OracleBackend>(*e.store, e.kg, &e.model);
    FaultBackend faulty(std::move(inner), FaultSpec{FaultClass::bad_fact_id, rate, 4242});
    auto preset = *preset_by_name("full");
    RunResult result = run_config(e.corpus, *e.store, e.kg, &e.model, faulty, preset);

    const double n = static_cast<double>(result.report.prov_ok.count);
    const double expected = 1.0 - rate;
    const double half_width = 1.96 * std::sqrt(rate * (1 - rate) / n);
    CHECK(result.report.prov_ok.mean > expected - half_width);
    CHECK(result.report.prov_ok.mean < expected + half_width);
    CHECK(result.report.struct_ok.mean == 1.0);  // structure untouched by this class
}

TEST_CASE("run_config is deterministic for mock backends") {
    Env& e = env();
    auto preset = *preset_by_name("full");
    auto run = [&]() {
        auto inner = std::make_unique<OracleBackend>(*e.store, e.kg, &e.model);
        FaultBackend faulty(std::move(inner), FaultSpec{FaultClass::drop_key, 0.5, 11});
        return run_config(e.corpus, *e.store, e.kg, &e.model, faulty, preset);
    };
    RunResult r1 = run();
    RunResult r2 = run();
    CHECK(aggregate_to_json(r1.report).dump() == aggregate_to_json(r2.report).dump());
    REQUIRE(r1.records.size() == r2.records.size());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        CHECK(metric_record_to_json(r1.records[i]).dump() ==
              metric_record_to_json(r2.records[i]).dump());
    }
}

TEST_CASE("no-simulator preset collapses counterfactual accuracy toward chance") {
    Env& e = env();
    std::vector<QAInstance> cf_corpus;
    for (const auto& qa : e.corpus)
        if (qa.task_type == TaskType::counterfactual) cf_corpus.push_back(qa);
    REQUIRE(!cf_corpus.empty());

    auto no_sim = *preset_by_name("no_simulator");
    OracleBackend blind(*e.store, e.kg, &e.model, ActionPolicy{}, false, 17);
    RunResult blind_result = run_config(cf_corpus, *e.store, e.kg, &e.model, blind, no_sim);

    auto full = *preset_by_name("full");
    OracleBackend sighted(*e.store, e.kg, &e.model);
    RunResult full_result = run_config(cf_corpus, *e.store, e.kg, &e.model, sighted, full);

    CHECK(full_result.report.cf_direction_ok.mean == 1.0);
    CHECK(blind_result.report.cf_direction_ok.mean < full_result.report.cf_direction_ok.mean);
}

TEST_CASE("metric denominators only count applicable instances") {
    Env& e = env();
    OracleBackend oracle(*e.store, e.kg, &e.model);
    auto preset = *preset_by_name("full");
    RunResult result = run_config(e.corpus, *e.store, e.kg, &e.model, oracle, preset);

    std::int64_t diag = 0, cf = 0, temporal = 0;
    for (const auto& qa : e.corpus) {
        if (qa.task_type == TaskType::diagnostic) ++diag;
        if (qa.task_type == TaskType::counterfactual) ++cf;
        if (qa.task_type == TaskType::temporal_count) ++temporal;
    }
    CHECK(result.report.label_consistent.count == diag);
    CHECK(result.report.cf_direction_ok.count == cf);
    CHECK(result.report.temporal_ok.count == temporal);
    CHECK(result.report.full_pass.count == diag);
    CHECK(result.report.struct_ok.count == static_cast<std::int64_t>(e.corpus.size()));
}

TEST_CASE("markdown comparison renders one row per configuration") {
    std::vector<MetricRecord> records;
    MetricRecord r;
    r.qa_id = "x";
    r.task_type = TaskType::diagnostic;
    r.struct_ok = true;
    r.prov_ok = true;
    r.label_consistent = true;
    records.push_back(r);
    auto a = aggregate("full", records);
    auto b = aggregate("no_provenance", records);
    std::string md = render_comparison_markdown({a, b});
    CHECK(md.find("| full |") != std::string::npos);
    CHECK(md.find("| no_provenance |") != std::string::npos);
    CHECK(md.find("Full Pass") != std::string::npos);
}
