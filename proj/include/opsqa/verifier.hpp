#pragma once
// Deterministic validation of answer envelopes against the store, KG, and
// risk semantics, plus the admissibility gate with incident logging.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opsqa/answer.hpp"
#include "opsqa/kg.hpp"
#include "opsqa/qa_builder.hpp"
#include "opsqa/store.hpp"

namespace opsqa {

struct Finding {
    std::string code;
    std::string message;
    std::string locator;  // feature name, key, file, ...
};

struct VerifierReport {
    std::string qa_id;
    bool struct_ok = false;
    bool prov_ok = false;  // evaluated only when struct_ok
    std::optional<bool> label_consistent;   // diagnostic only
    std::optional<bool> cf_direction_ok;    // counterfactual only
    std::vector<Finding> issues;

    bool all_applicable_pass() const {
        return struct_ok && prov_ok && label_consistent.value_or(true) &&
               cf_direction_ok.value_or(true);
    }
};

VerifierReport verify(const ParsedAnswer& answer, const QAInstance& qa,
                      const EpisodicStore& store, const KnowledgeGraph& kg);

enum class GateOutcome { admit, flag, route_to_review };

const char* to_string(GateOutcome o);

struct GatePolicy {
    double min_confidence = 0.5;
};

struct Incident {
    std::string timestamp;
    std::string qa_id;
    GateOutcome outcome = GateOutcome::flag;
    std::vector<std::string> codes;
};

struct GateDecision {
    GateOutcome outcome = GateOutcome::admit;
    std::optional<Incident> incident;  // present when outcome != admit
};

// Append-only JSONL incident log. Appends are serialized by the caller
// (single log writer); a write failure throws, aborting the gate.
class IncidentLog {
public:
    explicit IncidentLog(std::string path,
                         std::function<std::string()> clock = nullptr);

    // Stamps the incident with the log clock when needed and appends it;
    // returns the record as written.
    Incident append(const Incident& incident);
    const std::string& path() const { return path_; }

    struct Replay {
        std::int64_t admits = 0, flags = 0, reviews = 0;
    };
    static Replay replay(const std::string& path);

private:
    std::string path_;
    std::function<std::string()> clock_;
};

// admit: all applicable checks pass and confidence clears the policy floor.
// route_to_review: provenance or counterfactual-direction failures.
// flag: everything else. Non-admit outcomes append one incident.
GateDecision gate(const VerifierReport& report, const ParsedAnswer& answer,
                  const GatePolicy& policy, IncidentLog* log = nullptr);

}  // namespace opsqa
