#include "opsqa/verifier.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>

namespace opsqa {

namespace {

// Predicted diagnostic label: the first single-quoted token of the direct
// answer, else the trimmed answer itself.
std::string extract_predicted_label(const std::string& direct_answer) {
    auto open = direct_answer.find('\'');
    if (open != std::string::npos) {
        auto close = direct_answer.find('\'', open + 1);
        if (close != std::string::npos) return direct_answer.substr(open + 1, close - open - 1);
    }
    std::string out = direct_answer;
    while (!out.empty() && (out.back() == '.' || out.back() == ' ')) out.pop_back();
    return out;
}

std::string default_clock() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace

VerifierReport verify(const ParsedAnswer& answer, const QAInstance& qa,
                      const EpisodicStore& store, const KnowledgeGraph& kg) {
    VerifierReport report;
    report.qa_id = qa.qa_id;

    report.struct_ok = answer.ok();
    if (!report.struct_ok) {
        report.issues.push_back({"struct.parse", answer.failure, ""});
        if (qa.task_type == TaskType::diagnostic) report.label_consistent = false;
        if (qa.task_type == TaskType::counterfactual && qa.counterfactual)
            report.cf_direction_ok = false;
        return report;
    }
    const AnswerEnvelope& env = *answer.envelope;

    // Provenance: cited fact must exist, cited features must exist in it,
    // and file/row must match the fact's own provenance when provided.
    bool prov_ok = true;
    std::optional<EpisodeFact> fact;
    if (!env.provenance.fact_id) {
        prov_ok = false;
        report.issues.push_back({"prov.fact_id_missing", "provenance cites no fact_id", ""});
    } else {
        fact = store.get_fact(*env.provenance.fact_id);
        if (!fact) {
            prov_ok = false;
            report.issues.push_back({"prov.fact_id_unknown",
                                     "cited fact_id not present in store", *env.provenance.fact_id});
        }
    }
    if (fact) {
        for (const auto& name : env.provenance.features) {
            if (!fact->has_feature(name)) {
                prov_ok = false;
                report.issues.push_back(
                    {"prov.feature_unknown", "cited feature not present in fact", name});
            }
        }
        if (env.provenance.file) {
            const auto& p = fact->provenance;
            std::set<std::string> known{p.telemetry_source_file, p.errors_source_file,
                                        p.maint_source_file, p.machines_source_file,
                                        fact->source_file};
            if (p.failure_source_file) known.insert(*p.failure_source_file);
            if (!known.count(*env.provenance.file)) {
                prov_ok = false;
                report.issues.push_back(
                    {"prov.file_mismatch", "cited file does not match fact provenance",
                     *env.provenance.file});
            }
        }
        if (env.provenance.row && *env.provenance.row != fact->row_index) {
            prov_ok = false;
            report.issues.push_back({"prov.row_mismatch",
                                     "cited row does not match fact row_index",
                                     std::to_string(*env.provenance.row)});
        }
    }
    report.prov_ok = prov_ok;

    if (qa.task_type == TaskType::diagnostic) {
        std::string predicted = extract_predicted_label(env.direct_answer);
        bool consistent = kg.normalize_label(predicted) == kg.normalize_label(qa.label);
        report.label_consistent = consistent;
        if (!consistent)
            report.issues.push_back(
                {"label.mismatch", "predicted label does not normalize to gold", predicted});
    }

    if (qa.task_type == TaskType::counterfactual && qa.counterfactual) {
        std::optional<RiskDirection> predicted;
        if (env.counterfactual && env.counterfactual->risk_before &&
            env.counterfactual->risk_after) {
            // numbers first; the textual label is only a fallback
            predicted = direction_from_delta(*env.counterfactual->risk_after -
                                             *env.counterfactual->risk_before);
        } else if (env.counterfactual && env.counterfactual->direction) {
            predicted = direction_from_string(*env.counterfactual->direction);
        }
        if (!predicted) {
            report.cf_direction_ok = false;
            report.issues.push_back(
                {"cf.missing", "no usable counterfactual direction in answer", ""});
        } else {
            bool ok = *predicted == qa.counterfactual->direction;
            report.cf_direction_ok = ok;
            if (!ok)
                report.issues.push_back({"cf.direction_mismatch",
                                         "direction disagrees with the gold simulation",
                                         to_string(*predicted)});
        }
    }

    return report;
}

const char* to_string(GateOutcome o) {
    switch (o) {
        case GateOutcome::admit: return "admit";
        case GateOutcome::flag: return "flag";
        case GateOutcome::route_to_review: return "route_to_review";
    }
    return "flag";
}

IncidentLog::IncidentLog(std::string path, std::function<std::string()> clock)
    : path_(std::move(path)), clock_(clock ? std::move(clock) : default_clock) {}

Incident IncidentLog::append(const Incident& incident) {
    Incident stamped = incident;
    if (stamped.timestamp.empty()) stamped.timestamp = clock_();
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot open incident log '" + path_ + "'");
    nlohmann::ordered_json j;
    j["timestamp"] = stamped.timestamp;
    j["qa_id"] = stamped.qa_id;
    j["outcome"] = to_string(stamped.outcome);
    j["codes"] = stamped.codes;
    out << j.dump() << "\n";
    if (!out) throw std::runtime_error("write failed for incident log '" + path_ + "'");
    return stamped;
}

IncidentLog::Replay IncidentLog::replay(const std::string& path) {
    Replay counts;
    std::ifstream in(path, std::ios::binary);
    if (!in) return counts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        std::string outcome = j.value("outcome", "");
        if (outcome == "admit") ++counts.admits;
        else if (outcome == "flag") ++counts.flags;
        else if (outcome == "route_to_review") ++counts.reviews;
    }
    return counts;
}

GateDecision gate(const VerifierReport& report, const ParsedAnswer& answer,
                  const GatePolicy& policy, IncidentLog* log) {
    GateDecision decision;
    // Missing confidence is treated as 0.
    double confidence = answer.envelope ? answer.envelope->confidence : 0.0;

    std::vector<std::string> codes;
    for (const auto& f : report.issues) codes.push_back(f.code);

    bool safety_failure = (report.struct_ok && !report.prov_ok) ||
                          (report.cf_direction_ok && !*report.cf_direction_ok);
    bool all_pass = report.all_applicable_pass();
    bool confident = confidence >= policy.min_confidence;

    if (all_pass && confident) {
        decision.outcome = GateOutcome::admit;
        return decision;
    }
    decision.outcome = safety_failure ? GateOutcome::route_to_review : GateOutcome::flag;
    if (!confident && all_pass) codes.push_back("gate.low_confidence");

    Incident incident;
    incident.qa_id = report.qa_id;
    incident.outcome = decision.outcome;
    incident.codes = std::move(codes);
    if (log) {
        decision.incident = log->append(incident);
    } else {
        incident.timestamp = default_clock();
        decision.incident = std::move(incident);
    }
    return decision;
}

}  // namespace opsqa
