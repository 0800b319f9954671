// opsqa: command-line pipeline from raw telemetry tables to scored QA runs.
//
//   synth | extract | ingest | train | build-qa | prompt | answer | verify |
//   evaluate | report
//
// Every flag can also be supplied through a JSON config (--config); explicit
// flags win. Exit codes are stage-specific (see kStageCodes).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "opsqa/extractor.hpp"
#include "opsqa/pipeline.hpp"
#include "opsqa/synth.hpp"

using namespace opsqa;

namespace {

const std::map<std::string, int> kStageCodes = {
    {"synth", 10},    {"extract", 11}, {"ingest", 12},  {"train", 13},  {"build-qa", 14},
    {"prompt", 15},   {"answer", 16},  {"verify", 17},  {"evaluate", 18}, {"report", 19},
};

// Applies config-file values to options the user did not set on the line.
void apply_config(CLI::App* cmd, const nlohmann::json& config) {
    if (config.is_null()) return;
    auto section = config.contains(cmd->get_name()) ? config[cmd->get_name()] : config;
    for (const auto& opt : cmd->get_options()) {
        if (opt->count() > 0) continue;
        auto names = opt->get_lnames();
        if (names.empty()) continue;
        const std::string& name = names.front();
        if (!section.contains(name)) continue;
        const auto& v = section[name];
        std::string text = v.is_string() ? v.get<std::string>() : v.dump();
        opt->add_result(text);
        opt->run_callback();
    }
}

std::vector<TaskType> parse_tasks(const std::string& csv) {
    std::map<std::string, TaskType> alias = {
        {"desc", TaskType::descriptive},        {"descriptive", TaskType::descriptive},
        {"temp", TaskType::temporal_count},     {"temporal_count", TaskType::temporal_count},
        {"diag", TaskType::diagnostic},         {"diagnostic", TaskType::diagnostic},
        {"cf", TaskType::counterfactual},       {"counterfactual", TaskType::counterfactual},
        {"action", TaskType::action_recommendation},
        {"action_recommendation", TaskType::action_recommendation},
    };
    std::vector<TaskType> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto it = alias.find(item);
        if (it == alias.end()) throw CLI::ValidationError("--tasks", "unknown task '" + item + "'");
        out.push_back(it->second);
    }
    return out;
}

std::unique_ptr<AnswerBackend> make_backend(const std::string& kind, const EpisodicStore& store,
                                            const KnowledgeGraph& kg, const RiskModel* model,
                                            const ActionPolicy& policy, bool simulator_access,
                                            std::uint64_t seed, bool emit_json,
                                            const std::string& fault_class, double fault_rate,
                                            std::uint64_t fault_seed) {
    if (kind == "oracle") {
        return std::make_unique<OracleBackend>(store, kg, model, policy, simulator_access, seed,
                                               emit_json);
    }
    if (kind == "fault") {
        auto cls = fault_class_from_string(fault_class);
        if (!cls) throw CLI::ValidationError("--fault-class", "unknown class '" + fault_class + "'");
        FaultSpec spec{*cls, fault_rate, fault_seed};
        auto inner = std::make_unique<OracleBackend>(store, kg, model, policy, simulator_access,
                                                     seed, emit_json);
        return std::make_unique<FaultBackend>(std::move(inner), spec);
    }
    if (kind == "remote") {
        RemoteConfig config;
        if (const char* url = std::getenv("ANSWERER_URL")) config.url = url;
        if (const char* header = std::getenv("ANSWERER_AUTH_HEADER")) {
            std::string h = header;
            auto colon = h.find(':');
            if (colon != std::string::npos)
                config.headers[h.substr(0, colon)] = h.substr(colon + 1);
        }
        return std::make_unique<RemoteBackend>(config);
    }
    throw CLI::ValidationError("--backend", "unknown backend '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Episode-grounded QA pipeline over industrial telemetry"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");

    nlohmann::json config;

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "Generate seeded synthetic PdM-schema tables");
    std::string synth_out = ".";
    SyntheticSpec synth_spec;
    synth_cmd->add_option("--out-dir", synth_out, "Output directory for the five CSVs");
    synth_cmd->add_option("--seed", synth_spec.seed, "Generator seed");
    synth_cmd->add_option("--n-machines", synth_spec.n_machines, "Number of machines");
    synth_cmd->add_option("--hours", synth_spec.hours, "Simulated hours per machine");

    // ---- extract ----
    auto* extract_cmd = app.add_subcommand("extract", "Extract episode facts from CSV tables");
    std::string f_telemetry, f_failures, f_errors, f_maint, f_machines, f_out, f_kg;
    ExtractorConfig ex_cfg;
    extract_cmd->add_option("--telemetry", f_telemetry, "Telemetry CSV")->required();
    extract_cmd->add_option("--failures", f_failures, "Failures CSV")->required();
    extract_cmd->add_option("--errors", f_errors, "Errors CSV")->required();
    extract_cmd->add_option("--maint", f_maint, "Maintenance CSV")->required();
    extract_cmd->add_option("--machines", f_machines, "Machines CSV")->required();
    extract_cmd->add_option("--out", f_out, "Output facts JSONL")->required();
    extract_cmd->add_option("--window-hours", ex_cfg.window_hours, "Historical window length");
    extract_cmd->add_option("--horizon-hours", ex_cfg.horizon_hours, "Healthy-sampling horizon");
    extract_cmd->add_option("--max-healthy-per-machine", ex_cfg.max_healthy_per_machine,
                            "Cap on healthy episodes per machine");
    extract_cmd->add_option("--dataset", ex_cfg.dataset, "Dataset tag used in fact ids");
    extract_cmd->add_option("--kg", f_kg, "Optional KG file for enrichment");

    // ---- ingest ----
    auto* ingest_cmd = app.add_subcommand("ingest", "Ingest facts JSONL into the episodic store");
    std::string i_db, i_facts;
    bool i_no_overwrite = false;
    ingest_cmd->add_option("--db", i_db, "Store file")->required();
    ingest_cmd->add_option("--facts", i_facts, "Facts JSONL")->required();
    ingest_cmd->add_flag("--no-overwrite", i_no_overwrite, "Keep existing facts on id conflict");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train the risk model from stored facts");
    std::string t_db, t_facts, t_model_out = "risk_model.json";
    TrainConfig t_cfg;
    train_cmd->add_option("--db", t_db, "Store file (train on all stored facts)");
    train_cmd->add_option("--facts", t_facts, "Facts JSONL (alternative to --db)");
    train_cmd->add_option("--model-out", t_model_out, "Output model JSON");
    train_cmd->add_option("--l2", t_cfg.l2_strength, "L2 regularization strength");
    train_cmd->add_option("--max-iters", t_cfg.max_iters, "Maximum optimizer iterations");
    train_cmd->add_option("--tol", t_cfg.tolerance, "Gradient-norm stopping tolerance");

    // ---- build-qa ----
    auto* qa_cmd = app.add_subcommand("build-qa", "Build the gold QA corpus");
    std::string q_db, q_kg, q_model, q_out = "qa.jsonl", q_tasks = "desc,temp,diag,cf,action";
    ActionPolicy q_policy;
    qa_cmd->add_option("--db", q_db, "Store file")->required();
    qa_cmd->add_option("--kg", q_kg, "KG file")->required();
    qa_cmd->add_option("--model", q_model, "Risk model JSON (needed for cf/action tasks)");
    qa_cmd->add_option("--out", q_out, "Output QA JSONL");
    qa_cmd->add_option("--tasks", q_tasks, "Comma-separated task list");
    qa_cmd->add_option("--risk-threshold", q_policy.risk_threshold,
                       "Work-order risk threshold in (0,1)");

    // ---- prompt ----
    auto* prompt_cmd = app.add_subcommand("prompt", "Render the prompt for one QA instance");
    std::string p_db, p_qa, p_qa_id, p_out;
    bool p_json = false, p_no_kg = false, p_no_episodic = false;
    prompt_cmd->add_option("--db", p_db, "Store file")->required();
    prompt_cmd->add_option("--qa", p_qa, "QA JSONL")->required();
    prompt_cmd->add_option("--qa-id", p_qa_id, "QA instance id")->required();
    prompt_cmd->add_option("--out", p_out, "Write to file instead of stdout");
    prompt_cmd->add_flag("--json", p_json, "Emit {system, user} JSON instead of two-part text");
    prompt_cmd->add_flag("--no-kg", p_no_kg, "Drop the FMEA context block");
    prompt_cmd->add_flag("--no-episodic", p_no_episodic, "Drop numeric evidence and identifiers");

    // ---- answer ----
    auto* answer_cmd = app.add_subcommand("answer", "Produce answers for the whole corpus");
    std::string a_db, a_kg, a_model, a_qa, a_out = "answers.jsonl", a_backend = "oracle";
    std::string a_preset = "full", a_fault_class = "non_json";
    double a_fault_rate = 1.0;
    std::uint64_t a_fault_seed = 0, a_seed = 0;
    ActionPolicy a_policy;
    answer_cmd->add_option("--db", a_db, "Store file")->required();
    answer_cmd->add_option("--kg", a_kg, "KG file")->required();
    answer_cmd->add_option("--model", a_model, "Risk model JSON");
    answer_cmd->add_option("--qa", a_qa, "QA JSONL")->required();
    answer_cmd->add_option("--out", a_out, "Answers JSONL");
    answer_cmd->add_option("--backend", a_backend, "oracle | fault | remote");
    answer_cmd->add_option("--preset", a_preset, "Evaluation preset for prompt toggles");
    answer_cmd->add_option("--fault-class", a_fault_class, "Fault corruption class");
    answer_cmd->add_option("--fault-rate", a_fault_rate, "Fault rate in [0,1]");
    answer_cmd->add_option("--fault-seed", a_fault_seed, "Fault decision seed");
    answer_cmd->add_option("--seed", a_seed, "Oracle seed (no-simulator direction guessing)");
    answer_cmd->add_option("--risk-threshold", a_policy.risk_threshold, "Work-order threshold");

    // ---- verify ----
    auto* verify_cmd = app.add_subcommand("verify", "Verify answers and run the safety gate");
    std::string v_db, v_kg, v_qa, v_answers, v_out = "verify.jsonl",
                v_incidents = "incidents.jsonl";
    double v_min_confidence = 0.5;
    std::string v_preset = "full";
    verify_cmd->add_option("--db", v_db, "Store file")->required();
    verify_cmd->add_option("--kg", v_kg, "KG file")->required();
    verify_cmd->add_option("--qa", v_qa, "QA JSONL")->required();
    verify_cmd->add_option("--answers", v_answers, "Answers JSONL")->required();
    verify_cmd->add_option("--out", v_out, "Verifier reports JSONL");
    verify_cmd->add_option("--incident-log", v_incidents, "Append-only incident log");
    verify_cmd->add_option("--min-confidence", v_min_confidence, "Gate confidence floor");
    verify_cmd->add_option("--preset", v_preset, "Preset used when rendering evidence");

    // ---- evaluate ----
    auto* eval_cmd = app.add_subcommand("evaluate", "Score answers into metrics and a report");
    std::string e_db, e_kg, e_qa, e_answers, e_metrics = "metrics.jsonl",
                e_report = "aggregate.json";
    std::string e_preset = "full";
    double e_min_confidence = 0.5;
    eval_cmd->add_option("--db", e_db, "Store file")->required();
    eval_cmd->add_option("--kg", e_kg, "KG file")->required();
    eval_cmd->add_option("--qa", e_qa, "QA JSONL")->required();
    eval_cmd->add_option("--answers", e_answers, "Answers JSONL")->required();
    eval_cmd->add_option("--out-metrics", e_metrics, "Per-instance metric records JSONL");
    eval_cmd->add_option("--out-report", e_report, "Aggregate report JSON");
    eval_cmd->add_option("--preset", e_preset, "Preset label recorded in the report");
    eval_cmd->add_option("--min-confidence", e_min_confidence, "Gate confidence floor");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "Render a comparison table across runs");
    std::vector<std::string> r_inputs;
    std::string r_out_md = "report.md", r_out_csv = "report.csv";
    report_cmd->add_option("--inputs", r_inputs, "Aggregate report JSON files")->required();
    report_cmd->add_option("--out", r_out_md, "Markdown output");
    report_cmd->add_option("--csv", r_out_csv, "CSV output");

    CLI11_PARSE(app, argc, argv);

    CLI::App* active = app.get_subcommands().front();
    const std::string stage = active->get_name();

    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
            config = nlohmann::json::parse(in);
            apply_config(active, config);
        }

        if (active == synth_cmd) {
            auto paths = generate_synthetic(synth_spec, synth_out);
            std::cout << "Wrote " << paths.telemetry << " and four companion tables\n";
        } else if (active == extract_cmd) {
            RawTables tables = load_tables(f_telemetry, f_failures, f_errors, f_maint, f_machines);
            KnowledgeGraph kg;
            const KnowledgeGraph* kg_ptr = nullptr;
            if (!f_kg.empty()) {
                kg = load_kg(f_kg);
                kg_ptr = &kg;
            }
            auto facts = run_extraction(tables, ex_cfg, kg_ptr);
            write_facts_jsonl(facts, f_out);
            std::cout << "Extracted " << facts.size() << " facts -> " << f_out << "\n";
        } else if (active == ingest_cmd) {
            EpisodicStore store(i_db);
            IngestReport report = store.ingest_jsonl(i_facts, !i_no_overwrite);
            std::cout << "Ingested " << report.ingested << "\n";
            if (report.skipped > 0) {
                std::cout << "Skipped " << report.skipped << " malformed line(s)\n";
                for (const auto& err : report.errors) std::cerr << "  " << err << "\n";
            }
            std::cout << "Assets: [";
            auto assets = store.list_assets();
            for (std::size_t i = 0; i < assets.size(); ++i)
                std::cout << (i ? "," : "") << "'" << assets[i] << "'";
            std::cout << "]\n";
        } else if (active == train_cmd) {
            std::vector<EpisodeFact> facts;
            if (!t_facts.empty()) {
                facts = read_facts_jsonl(t_facts);
            } else if (!t_db.empty()) {
                EpisodicStore store(t_db);
                for (const auto& id : store.list_fact_ids()) facts.push_back(*store.get_fact(id));
            } else {
                throw std::runtime_error("train needs --db or --facts");
            }
            RiskModel model = train_risk_model(facts, t_cfg);
            model.save(t_model_out);
            std::cout << "Trained on " << facts.size() << " facts ("
                      << model.class_names().size() << " classes, "
                      << model.feature_names().size() << " features); final loss "
                      << model.training_meta().final_loss << " -> " << t_model_out << "\n";
        } else if (active == qa_cmd) {
            EpisodicStore store(q_db);
            KnowledgeGraph kg = load_kg(q_kg);
            RiskModel model;
            const RiskModel* model_ptr = nullptr;
            if (!q_model.empty()) {
                model = RiskModel::load(q_model);
                model_ptr = &model;
            }
            std::vector<EpisodeFact> facts;
            for (const auto& id : store.list_fact_ids()) facts.push_back(*store.get_fact(id));
            CorpusStats stats;
            auto corpus = build_corpus(facts, kg, model_ptr, parse_tasks(q_tasks), q_policy, &stats);
            write_qa_jsonl(corpus, q_out);
            std::cout << "Built " << corpus.size() << " QA instances -> " << q_out << "\n";
            for (const auto& [task, count] : stats.built_per_task)
                std::cout << "  " << task << ": " << count << "\n";
            if (!stats.skipped.empty())
                std::cout << "  skipped: " << stats.skipped.size() << "\n";
        } else if (active == prompt_cmd) {
            EpisodicStore store(p_db);
            auto corpus = read_qa_jsonl(p_qa);
            const QAInstance* qa = nullptr;
            for (const auto& instance : corpus) {
                if (instance.qa_id == p_qa_id) qa = &instance;
            }
            if (!qa) throw std::runtime_error("qa_id '" + p_qa_id + "' not found in " + p_qa);
            auto fact = store.get_fact(qa->fact_id);
            if (!fact) throw std::runtime_error("fact '" + qa->fact_id + "' not in store");
            PromptOptions options;
            options.include_kg = !p_no_kg;
            options.include_episodic = !p_no_episodic;
            Prompt prompt = build_prompt(*fact, *qa, options);
            std::string rendered =
                p_json ? prompt_to_json(prompt).dump(2) + "\n"
                       : "=== SYSTEM ===\n" + prompt.system_text + "\n\n=== USER ===\n" +
                             prompt.user_text;
            if (p_out.empty()) {
                std::cout << rendered;
            } else {
                std::ofstream out(p_out, std::ios::binary);
                out << rendered;
            }
        } else if (active == answer_cmd) {
            EpisodicStore store(a_db);
            KnowledgeGraph kg = load_kg(a_kg);
            RiskModel model;
            const RiskModel* model_ptr = nullptr;
            if (!a_model.empty()) {
                model = RiskModel::load(a_model);
                model_ptr = &model;
            }
            auto corpus = read_qa_jsonl(a_qa);
            auto preset = preset_by_name(a_preset);
            if (!preset) throw std::runtime_error("unknown preset '" + a_preset + "'");
            auto backend = make_backend(a_backend, store, kg, model_ptr, a_policy,
                                        preset->simulator_access, a_seed,
                                        preset->provenance_enforcement, a_fault_class,
                                        a_fault_rate, a_fault_seed);
            auto answers = answer_corpus(corpus, store, *backend, *preset);
            write_answers_jsonl(answers, a_out);
            std::cout << "Answered " << answers.size() << " instances with backend "
                      << backend->name() << " -> " << a_out << "\n";
        } else if (active == verify_cmd) {
            EpisodicStore store(v_db);
            KnowledgeGraph kg = load_kg(v_kg);
            auto corpus = read_qa_jsonl(v_qa);
            auto answers = read_answers_jsonl(v_answers);
            auto preset = preset_by_name(v_preset);
            if (!preset) throw std::runtime_error("unknown preset '" + v_preset + "'");
            IncidentLog log(v_incidents);
            GatePolicy policy{v_min_confidence};
            auto result = evaluate_answers(corpus, answers, store, kg, *preset, policy, &log);
            write_verifier_reports_jsonl(result.verifier_reports, v_out);
            std::cout << "Verified " << result.verifier_reports.size() << " answers -> " << v_out
                      << "\n";
            std::cout << "Gate: admit=" << result.admits << " flag=" << result.flags
                      << " route_to_review=" << result.reviews << " (incidents -> " << v_incidents
                      << ")\n";
        } else if (active == eval_cmd) {
            EpisodicStore store(e_db);
            KnowledgeGraph kg = load_kg(e_kg);
            auto corpus = read_qa_jsonl(e_qa);
            auto answers = read_answers_jsonl(e_answers);
            auto preset = preset_by_name(e_preset);
            if (!preset) throw std::runtime_error("unknown preset '" + e_preset + "'");
            GatePolicy policy{e_min_confidence};
            auto result = evaluate_answers(corpus, answers, store, kg, *preset, policy, nullptr);
            write_metrics_jsonl(result.records, e_metrics);
            std::ofstream out(e_report, std::ios::binary);
            out << aggregate_to_json(result.report).dump(2) << "\n";
            std::cout << "Scored " << result.records.size() << " instances -> " << e_metrics
                      << ", " << e_report << "\n";
            std::cout << "Struct.OK " << result.report.struct_ok.mean << "  Prov.OK "
                      << result.report.prov_ok.mean << "  Full Pass " << result.report.full_pass.mean
                      << "\n";
        } else if (active == report_cmd) {
            std::vector<AggregateReport> reports;
            for (const auto& path : r_inputs) {
                std::ifstream in(path);
                if (!in) throw std::runtime_error("cannot open report '" + path + "'");
                auto j = nlohmann::json::parse(in);
                AggregateReport r;
                r.config = j.value("config", path);
                r.total_instances = j.value("total_instances", 0);
                auto mean = [&](const char* key) {
                    MetricMean m;
                    if (j.contains(key)) {
                        m.mean = j[key].value("mean", 0.0);
                        m.count = j[key].value("n", 0);
                    }
                    return m;
                };
                r.struct_ok = mean("struct_ok");
                r.prov_ok = mean("prov_ok");
                r.label_consistent = mean("label_consistent");
                r.cf_direction_ok = mean("cf_direction_ok");
                r.temporal_ok = mean("temporal_ok");
                r.entail_pass_rate = mean("entail_pass_rate");
                r.entail_pass_instance = mean("entail_pass_instance");
                r.claim_precision = mean("claim_precision");
                r.full_pass = mean("full_pass");
                reports.push_back(std::move(r));
            }
            std::string md = render_comparison_markdown(reports);
            {
                std::ofstream out(r_out_md, std::ios::binary);
                out << md;
            }
            {
                std::ofstream out(r_out_csv, std::ios::binary);
                out << aggregate_csv_header() << "\n";
                for (const auto& r : reports) out << aggregate_csv_row(r) << "\n";
            }
            std::cout << md;
        }
    } catch (const std::exception& e) {
        std::cerr << "error [" << stage << "]: " << e.what() << "\n";
        auto it = kStageCodes.find(stage);
        return it == kStageCodes.end() ? 1 : it->second;
    }
    return 0;
}
