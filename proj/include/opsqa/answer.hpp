#pragma once
// Answer production and parsing under the strict JSON contract. Three
// interchangeable backends: a gold-regenerating oracle, a seeded
// fault-injection wrapper, and a remote HTTP adapter.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opsqa/kg.hpp"
#include "opsqa/prompt.hpp"
#include "opsqa/qa_builder.hpp"
#include "opsqa/risk.hpp"
#include "opsqa/store.hpp"

namespace opsqa {

struct EnvelopeProvenance {
    std::optional<std::string> fact_id;
    std::vector<std::string> features;
    std::optional<std::string> file;
    std::optional<std::int64_t> row;
};

struct EnvelopeCounterfactual {
    std::optional<double> risk_before;
    std::optional<double> risk_after;
    std::optional<std::string> direction;
};

struct AnswerEnvelope {
    std::string direct_answer;
    std::string reasoning_answer;
    EnvelopeProvenance provenance;
    double confidence = 0.0;
    std::optional<EnvelopeCounterfactual> counterfactual;
    std::string raw_text;
};

// Structural failures are data, not errors.
struct ParsedAnswer {
    std::optional<AnswerEnvelope> envelope;
    std::string failure;  // first violated requirement when envelope is absent

    bool ok() const { return envelope.has_value(); }
};

// Extracts the first balanced top-level JSON object (prose around it is
// tolerated), then checks presence and types of the four mandatory keys.
ParsedAnswer parse_answer(const std::string& text);

class AnswerBackend {
public:
    virtual ~AnswerBackend() = default;
    virtual std::string answer(const Prompt& prompt, const QAInstance& qa) = 0;
    virtual std::string name() const = 0;
};

// Regenerates the gold answer from the store, KG, and model, so a full
// pipeline run is self-verifying. With `simulator_access` off it answers
// counterfactual direction by a seeded coin flip instead of the model.
class OracleBackend : public AnswerBackend {
public:
    OracleBackend(const EpisodicStore& store, const KnowledgeGraph& kg, const RiskModel* model,
                  ActionPolicy policy = {}, bool simulator_access = true,
                  std::uint64_t seed = 0, bool emit_json = true);

    std::string answer(const Prompt& prompt, const QAInstance& qa) override;
    std::string name() const override { return "oracle"; }

private:
    const EpisodicStore& store_;
    const KnowledgeGraph& kg_;
    const RiskModel* model_;
    ActionPolicy policy_;
    bool simulator_access_;
    std::uint64_t seed_;
    bool emit_json_;
};

enum class FaultClass { drop_key, bad_fact_id, ghost_feature, wrong_row, direction_flip, non_json };

const char* to_string(FaultClass c);
std::optional<FaultClass> fault_class_from_string(const std::string& text);

struct FaultSpec {
    FaultClass corruption = FaultClass::non_json;
    double rate = 1.0;  // in [0, 1]
    std::uint64_t seed = 0;
};

// Corrupts an inner backend's output per FaultSpec. Decisions hash the qa_id
// with the seed, so they are reproducible and order-independent.
class FaultBackend : public AnswerBackend {
public:
    FaultBackend(std::unique_ptr<AnswerBackend> inner, FaultSpec spec);

    std::string answer(const Prompt& prompt, const QAInstance& qa) override;
    std::string name() const override;

    // True iff the corruption decision fires for this qa_id.
    bool corrupts(const std::string& qa_id) const;

private:
    std::unique_ptr<AnswerBackend> inner_;
    FaultSpec spec_;
};

struct RemoteConfig {
    std::string url;                         // e.g. http://127.0.0.1:8080/answer
    std::map<std::string, std::string> headers;
    double timeout_seconds = 30.0;
    int max_retries = 2;
};

// POSTs {system, user, params} and returns the response body verbatim.
class RemoteBackend : public AnswerBackend {
public:
    explicit RemoteBackend(RemoteConfig config);

    std::string answer(const Prompt& prompt, const QAInstance& qa) override;
    std::string name() const override { return "remote"; }

private:
    RemoteConfig config_;
};

// Builds the oracle's answer JSON for one QA instance (shared by backends
// and tests).
nlohmann::ordered_json oracle_answer_json(const QAInstance& gold);

}  // namespace opsqa
