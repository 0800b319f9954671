#include "opsqa/pipeline.hpp"

#include <fstream>
#include <stdexcept>

namespace opsqa {

void write_answers_jsonl(const std::vector<AnswerRecord>& answers, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const auto& rec : answers) {
        nlohmann::ordered_json j;
        j["qa_id"] = rec.qa_id;
        j["answer"] = rec.answer;
        out << j.dump() << "\n";
    }
}

std::vector<AnswerRecord> read_answers_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open answers file '" + path + "'");
    std::vector<AnswerRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        out.push_back({j.value("qa_id", ""), j.value("answer", "")});
    }
    return out;
}

nlohmann::ordered_json verifier_report_to_json(const VerifierReport& r) {
    nlohmann::ordered_json j;
    j["qa_id"] = r.qa_id;
    j["struct_ok"] = r.struct_ok;
    j["prov_ok"] = r.prov_ok;
    j["label_consistent"] = r.label_consistent ? nlohmann::ordered_json(*r.label_consistent)
                                               : nlohmann::ordered_json(nullptr);
    j["cf_direction_ok"] = r.cf_direction_ok ? nlohmann::ordered_json(*r.cf_direction_ok)
                                             : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json issues = nlohmann::ordered_json::array();
    for (const auto& f : r.issues) {
        issues.push_back({{"code", f.code}, {"message", f.message}, {"locator", f.locator}});
    }
    j["issues"] = std::move(issues);
    return j;
}

void write_verifier_reports_jsonl(const std::vector<VerifierReport>& reports,
                                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const auto& r : reports) out << verifier_report_to_json(r).dump() << "\n";
}

std::vector<AnswerRecord> answer_corpus(const std::vector<QAInstance>& corpus,
                                        const EpisodicStore& store, AnswerBackend& backend,
                                        const RunPreset& preset) {
    PromptOptions options;
    options.include_episodic = preset.include_episodic;
    options.include_kg = preset.include_kg;
    options.enforce_contract = preset.provenance_enforcement;
    options.include_simulator = preset.simulator_access;

    std::vector<AnswerRecord> out;
    for (const auto& qa : corpus) {
        auto fact = store.get_fact(qa.fact_id);
        std::string raw;
        if (fact) {
            Prompt prompt = build_prompt(*fact, qa, options);
            try {
                raw = backend.answer(prompt, qa);
            } catch (const std::exception& e) {
                raw = std::string("(backend error: ") + e.what() + ")";
            }
        }
        out.push_back({qa.qa_id, raw});
    }
    return out;
}

EvaluationResult evaluate_answers(const std::vector<QAInstance>& corpus,
                                  const std::vector<AnswerRecord>& answers,
                                  const EpisodicStore& store, const KnowledgeGraph& kg,
                                  const RunPreset& preset, const GatePolicy& gate_policy,
                                  IncidentLog* incident_log) {
    std::map<std::string, const std::string*> by_id;
    for (const auto& rec : answers) by_id[rec.qa_id] = &rec.answer;

    PromptOptions options;
    options.include_episodic = preset.include_episodic;
    options.include_kg = preset.include_kg;
    options.enforce_contract = preset.provenance_enforcement;
    options.include_simulator = preset.simulator_access;

    LexicalEntailmentJudge judge;
    EvaluationResult result;
    for (const auto& qa : corpus) {
        auto fact = store.get_fact(qa.fact_id);
        ParsedAnswer parsed;
        std::vector<std::string> evidence;
        auto it = by_id.find(qa.qa_id);
        if (it == by_id.end()) {
            parsed.failure = "no answer recorded for this qa_id";
        } else {
            parsed = parse_answer(*it->second);
        }
        if (fact) {
            Prompt prompt = build_prompt(*fact, qa, options);
            evidence.push_back(prompt.user_text);
        }

        VerifierReport report = verify(parsed, qa, store, kg);
        GateDecision decision = gate(report, parsed, gate_policy, incident_log);
        switch (decision.outcome) {
            case GateOutcome::admit: ++result.admits; break;
            case GateOutcome::flag: ++result.flags; break;
            case GateOutcome::route_to_review: ++result.reviews; break;
        }
        result.verifier_reports.push_back(report);
        result.records.push_back(
            score_instance(parsed, qa, report, fact ? &*fact : nullptr, kg, judge, evidence));
    }
    result.report = aggregate(preset.name, result.records);
    return result;
}

void write_metrics_jsonl(const std::vector<MetricRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (const auto& r : records) out << metric_record_to_json(r).dump() << "\n";
}

}  // namespace opsqa
