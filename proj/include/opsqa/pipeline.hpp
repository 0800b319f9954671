#pragma once
// File-level stage artifacts shared by the CLI and the test suites: answers
// JSONL, verifier-report JSONL, metric records, and aggregate reports.

#include <map>
#include <string>
#include <vector>

#include "opsqa/metrics.hpp"

namespace opsqa {

struct AnswerRecord {
    std::string qa_id;
    std::string answer;  // raw backend output
};

void write_answers_jsonl(const std::vector<AnswerRecord>& answers, const std::string& path);
std::vector<AnswerRecord> read_answers_jsonl(const std::string& path);

nlohmann::ordered_json verifier_report_to_json(const VerifierReport& report);

void write_verifier_reports_jsonl(const std::vector<VerifierReport>& reports,
                                  const std::string& path);

// Produces raw answers for every instance under the preset's prompt toggles.
std::vector<AnswerRecord> answer_corpus(const std::vector<QAInstance>& corpus,
                                        const EpisodicStore& store, AnswerBackend& backend,
                                        const RunPreset& preset);

struct EvaluationResult {
    std::vector<VerifierReport> verifier_reports;
    std::vector<MetricRecord> records;
    AggregateReport report;
    std::int64_t admits = 0, flags = 0, reviews = 0;
};

// verify + gate + score precomputed answers against the store and KG.
EvaluationResult evaluate_answers(const std::vector<QAInstance>& corpus,
                                  const std::vector<AnswerRecord>& answers,
                                  const EpisodicStore& store, const KnowledgeGraph& kg,
                                  const RunPreset& preset, const GatePolicy& gate_policy = {},
                                  IncidentLog* incident_log = nullptr);

void write_metrics_jsonl(const std::vector<MetricRecord>& records, const std::string& path);

}  // namespace opsqa
