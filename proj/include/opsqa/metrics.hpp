#pragma once
// Reliability metrics: per-instance records, aggregate reports with the
// Full Pass composite, claim checking, a pluggable entailment judge with a
// deterministic lexical fallback, and McNemar's paired significance test.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opsqa/answer.hpp"
#include "opsqa/verifier.hpp"

namespace opsqa {

// |claimed - actual| <= max(1e-6, 1e-3 * |actual|)
bool numeric_claim_matches(double claimed, double actual);

struct MetricRecord {
    std::string qa_id;
    TaskType task_type = TaskType::descriptive;
    bool struct_ok = false;
    bool prov_ok = false;
    std::optional<bool> label_consistent;
    std::optional<bool> cf_direction_ok;
    std::optional<bool> temporal_ok;
    std::optional<double> entail_pass_rate;      // per-sentence pass fraction
    std::optional<bool> entail_pass_instance;    // all sentences pass
    std::optional<double> claim_precision;       // null when no claims extracted
};

struct AtomicClaim {
    enum class Kind { numeric, relation };
    Kind kind = Kind::numeric;
    std::string subject;  // feature name or sensor name
    double value = 0.0;                  // numeric claims
    std::string verb;                    // relation claims: indicates / belongs to
    std::string object;                  // relation claims: failure-mode name
    std::string text;                    // matched span
};

// Two grammars: `<name_with_underscore> = <number>` (also "≈"), and
// "<sensor> indicates/belongs to <failure mode>". Everything else is ignored.
std::vector<AtomicClaim> extract_claims(const std::string& reasoning_text);

// Deterministic sentence split on ". ", "! ", "? " followed by an uppercase
// letter or digit.
std::vector<std::string> split_sentences(const std::string& text);

class EntailmentJudge {
public:
    virtual ~EntailmentJudge() = default;
    virtual double score(const std::string& sentence,
                         const std::vector<std::string>& evidence_texts) const = 0;
};

// Fraction of content tokens present in the evidence; numbers match under
// the claim tolerance. Stands in for an external NLI judge.
class LexicalEntailmentJudge : public EntailmentJudge {
public:
    double score(const std::string& sentence,
                 const std::vector<std::string>& evidence_texts) const override;
};

inline constexpr double kEntailmentThreshold = 0.80;

MetricRecord score_instance(const ParsedAnswer& answer, const QAInstance& qa,
                            const VerifierReport& report, const EpisodeFact* fact,
                            const KnowledgeGraph& kg, const EntailmentJudge& judge,
                            const std::vector<std::string>& evidence_texts);

// Interval overlap helper for timestamp-style temporal answers.
bool windows_overlap(Timestamp a_start, Timestamp a_end, Timestamp b_start, Timestamp b_end);

struct MetricMean {
    double mean = 0.0;
    std::int64_t count = 0;  // denominator: instances where the metric applies
};

struct AggregateReport {
    std::string config;
    std::int64_t total_instances = 0;
    std::map<std::string, std::int64_t> per_task;
    MetricMean struct_ok, prov_ok, label_consistent, cf_direction_ok, temporal_ok;
    MetricMean entail_pass_rate, entail_pass_instance, claim_precision;
    MetricMean full_pass;  // mean of (struct+prov+label)/3 over diagnostic instances
};

AggregateReport aggregate(const std::string& config_name,
                          const std::vector<MetricRecord>& records);

nlohmann::ordered_json aggregate_to_json(const AggregateReport& report);
nlohmann::ordered_json metric_record_to_json(const MetricRecord& record);
std::string aggregate_csv_header();
std::string aggregate_csv_row(const AggregateReport& report);

// Markdown comparison table across configurations.
std::string render_comparison_markdown(const std::vector<AggregateReport>& reports);

// Exact two-sided binomial test below 25 discordant pairs, else the
// continuity-corrected chi-square approximation. b = c = 0 gives p = 1.
double mcnemar_test(std::int64_t b, std::int64_t c);

// Evaluation presets: toggles for episodic evidence, KG context, provenance
// enforcement, and simulator access.
struct RunPreset {
    std::string name = "full";
    bool include_episodic = true;
    bool include_kg = true;
    bool provenance_enforcement = true;
    bool simulator_access = true;
};

// Named presets: full, llm_only, episodic_only, episodic_kg, no_provenance,
// no_simulator, no_kg, no_episodic.
std::optional<RunPreset> preset_by_name(const std::string& name);
std::vector<RunPreset> all_presets();

struct RunResult {
    AggregateReport report;
    std::vector<MetricRecord> records;
    std::vector<VerifierReport> verifier_reports;
    std::vector<std::string> answers;  // raw backend outputs, same order as corpus
};

// prompt -> answer -> verify -> score for every instance under the preset's
// toggles. Backend failures score as struct_ok = false and the run continues.
RunResult run_config(const std::vector<QAInstance>& corpus, const EpisodicStore& store,
                     const KnowledgeGraph& kg, const RiskModel* model, AnswerBackend& backend,
                     const RunPreset& preset, const GatePolicy& gate_policy = {},
                     IncidentLog* incident_log = nullptr);

}  // namespace opsqa
