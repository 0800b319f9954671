#pragma once
// Deterministic construction of gold QA instances (five task types) from a
// fact, the KG, and the trained risk model.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "opsqa/facts.hpp"
#include "opsqa/kg.hpp"
#include "opsqa/risk.hpp"

namespace opsqa {

enum class TaskType {
    descriptive,
    temporal_count,
    diagnostic,
    counterfactual,
    action_recommendation,
};

const char* to_string(TaskType t);
std::optional<TaskType> task_type_from_string(const std::string& text);
// Short code used inside qa ids: desc / temp / diag / ts_cf / ts_action.
const char* task_code(TaskType t);

struct ActionPolicy {
    double risk_threshold = 0.5;  // open a work order at or above this risk
};

struct QAInstance {
    std::string qa_id;
    std::string fact_id;
    TaskType task_type = TaskType::descriptive;
    std::string question;
    std::string direct_answer;
    std::string reasoning_answer;
    nlohmann::ordered_json provenance;  // fact_id, features, file, row, briefs
    std::string label;
    std::string asset_id;
    std::optional<CounterfactualResult> counterfactual;
    std::optional<double> confidence;
    std::optional<double> risk;                          // action only
    std::optional<std::map<std::string, double>> probs_before;  // action only
    nlohmann::ordered_json asset_profile_brief;    // may be null
    nlohmann::ordered_json failure_profile_brief;  // may be null

    std::vector<std::string> cited_features() const;
};

// Why an instance could not be built for a (fact, task) pair.
struct SkippedInstance {
    std::string fact_id;
    TaskType task_type;
    std::string reason;
};

struct BuildOutcome {
    std::optional<QAInstance> instance;
    std::string skip_reason;  // set when instance is absent
};

// Formats shared with the prompt/answer side so gold text and oracle answers
// agree byte for byte.
std::string format_number(double v);        // %.6g; claims round-trip the checker
std::string format_number_label(double v);  // %.4f for descriptive labels
std::string render_intervention(const std::map<std::string, double>& intervention);
std::optional<std::map<std::string, double>> parse_intervention(const std::string& text);

// Top-k feature names by |standardized value| under the model (k = 3),
// falling back to name order when no model is supplied.
std::vector<std::string> top_deviating_features(const EpisodeFact& fact, const RiskModel* model,
                                                std::size_t k = 3);

BuildOutcome build_qa(const EpisodeFact& fact, TaskType task, const KnowledgeGraph& kg,
                      const RiskModel* model = nullptr, const ActionPolicy& policy = {});

struct CorpusStats {
    std::map<std::string, std::int64_t> built_per_task;
    std::vector<SkippedInstance> skipped;
};

// One instance per applicable (fact, task), facts in the given order, output
// sorted by qa_id.
std::vector<QAInstance> build_corpus(const std::vector<EpisodeFact>& facts,
                                     const KnowledgeGraph& kg, const RiskModel* model,
                                     const std::vector<TaskType>& tasks,
                                     const ActionPolicy& policy, CorpusStats* stats = nullptr);

nlohmann::ordered_json qa_to_json(const QAInstance& qa);
QAInstance qa_from_json(const nlohmann::json& j);

void write_qa_jsonl(const std::vector<QAInstance>& instances, const std::string& path);
std::vector<QAInstance> read_qa_jsonl(const std::string& path);

}  // namespace opsqa
