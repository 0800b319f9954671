#include "opsqa/answer.hpp"

#include <stdexcept>

#include "opsqa/rng.hpp"

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include "httplib.h"

namespace opsqa {

namespace {

// First balanced top-level JSON object in the text, string-aware.
std::optional<std::string> extract_json_object(const std::string& text) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        if (text[start] != '{') continue;
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) return text.substr(start, i - start + 1);
            }
        }
        // unbalanced from this '{'; later ones cannot close either
        break;
    }
    return std::nullopt;
}

}  // namespace

ParsedAnswer parse_answer(const std::string& text) {
    ParsedAnswer out;
    auto blob = extract_json_object(text);
    if (!blob) {
        out.failure = "no JSON object found";
        return out;
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(*blob);
    } catch (const nlohmann::json::exception&) {
        out.failure = "malformed JSON object";
        return out;
    }

    for (const char* key : {"direct_answer", "reasoning_answer", "provenance", "confidence"}) {
        if (!j.contains(key)) {
            out.failure = std::string("missing mandatory key '") + key + "'";
            return out;
        }
    }
    if (!j["direct_answer"].is_string()) {
        out.failure = "direct_answer must be a string";
        return out;
    }
    if (!j["reasoning_answer"].is_string()) {
        out.failure = "reasoning_answer must be a string";
        return out;
    }
    if (!j["provenance"].is_object()) {
        out.failure = "provenance must be an object";
        return out;
    }
    if (!j["confidence"].is_number()) {
        out.failure = "confidence must be a number";
        return out;
    }
    double confidence = j["confidence"].get<double>();
    if (confidence < 0.0 || confidence > 1.0) {
        out.failure = "confidence outside [0, 1]";
        return out;
    }

    AnswerEnvelope env;
    env.raw_text = text;
    env.direct_answer = j["direct_answer"].get<std::string>();
    env.reasoning_answer = j["reasoning_answer"].get<std::string>();
    env.confidence = confidence;
    const auto& prov = j["provenance"];
    if (prov.contains("fact_id") && prov["fact_id"].is_string())
        env.provenance.fact_id = prov["fact_id"].get<std::string>();
    if (prov.contains("features") && prov["features"].is_array()) {
        for (const auto& f : prov["features"]) {
            if (f.is_string()) env.provenance.features.push_back(f.get<std::string>());
        }
    }
    if (prov.contains("file") && prov["file"].is_string())
        env.provenance.file = prov["file"].get<std::string>();
    if (prov.contains("row") && prov["row"].is_number_integer())
        env.provenance.row = prov["row"].get<std::int64_t>();
    if (j.contains("counterfactual") && j["counterfactual"].is_object()) {
        const auto& c = j["counterfactual"];
        EnvelopeCounterfactual cf;
        if (c.contains("risk_before") && c["risk_before"].is_number())
            cf.risk_before = c["risk_before"].get<double>();
        if (c.contains("risk_after") && c["risk_after"].is_number())
            cf.risk_after = c["risk_after"].get<double>();
        if (c.contains("direction") && c["direction"].is_string())
            cf.direction = c["direction"].get<std::string>();
        env.counterfactual = std::move(cf);
    }
    out.envelope = std::move(env);
    return out;
}

nlohmann::ordered_json oracle_answer_json(const QAInstance& gold) {
    nlohmann::ordered_json j;
    j["direct_answer"] = gold.direct_answer;
    j["reasoning_answer"] = gold.reasoning_answer;
    nlohmann::ordered_json prov;
    prov["fact_id"] = gold.fact_id;
    prov["features"] = gold.cited_features();
    if (gold.provenance.contains("file")) prov["file"] = gold.provenance["file"];
    if (gold.provenance.contains("row")) prov["row"] = gold.provenance["row"];
    j["provenance"] = std::move(prov);
    j["confidence"] = gold.confidence.value_or(0.9);
    if (gold.counterfactual) {
        nlohmann::ordered_json cf;
        cf["risk_before"] = gold.counterfactual->risk_before;
        cf["risk_after"] = gold.counterfactual->risk_after;
        cf["direction"] = to_string(gold.counterfactual->direction);
        j["counterfactual"] = std::move(cf);
    }
    return j;
}

OracleBackend::OracleBackend(const EpisodicStore& store, const KnowledgeGraph& kg,
                             const RiskModel* model, ActionPolicy policy, bool simulator_access,
                             std::uint64_t seed, bool emit_json)
    : store_(store),
      kg_(kg),
      model_(model),
      policy_(policy),
      simulator_access_(simulator_access),
      seed_(seed),
      emit_json_(emit_json) {}

std::string OracleBackend::answer(const Prompt& prompt, const QAInstance& qa) {
    auto fact = store_.get_fact(qa.fact_id);
    if (!fact) throw std::runtime_error("oracle: fact '" + qa.fact_id + "' not in store");

    BuildOutcome rebuilt = build_qa(*fact, qa.task_type, kg_,
                                    simulator_access_ ? model_ : nullptr, policy_);
    nlohmann::ordered_json j;
    if (rebuilt.instance) {
        j = oracle_answer_json(*rebuilt.instance);
    } else if (qa.task_type == TaskType::counterfactual ||
               qa.task_type == TaskType::action_recommendation) {
        // Without simulator access the oracle must still answer risk
        // questions; direction comes from a seeded coin flip and no numeric
        // risk block is produced.
        bool decrease = (hash64(qa.qa_id, seed_ ^ 0x5eedULL) & 1ULL) == 0;
        std::string direction = decrease ? "decrease" : "increase";
        j["direct_answer"] = "The risk of failure would " + direction + ".";
        j["reasoning_answer"] =
            "Without simulator access the direction is estimated qualitatively from the cited "
            "evidence.";
        nlohmann::ordered_json prov;
        prov["fact_id"] = qa.fact_id;
        prov["features"] = qa.cited_features();
        if (qa.provenance.contains("file")) prov["file"] = qa.provenance["file"];
        if (qa.provenance.contains("row")) prov["row"] = qa.provenance["row"];
        j["provenance"] = std::move(prov);
        j["confidence"] = 0.5;
        if (qa.task_type == TaskType::counterfactual) {
            nlohmann::ordered_json cf;
            cf["direction"] = direction;
            j["counterfactual"] = std::move(cf);
        }
    } else {
        throw std::runtime_error("oracle: could not rebuild gold for " + qa.qa_id + ": " +
                                 rebuilt.skip_reason);
    }

    if (!emit_json_) {
        // Free-text mode for the no-contract configuration.
        std::string direct = j["direct_answer"].get<std::string>();
        std::string reasoning = j["reasoning_answer"].get<std::string>();
        return direct + " " + reasoning;
    }
    (void)prompt;
    return j.dump();
}

const char* to_string(FaultClass c) {
    switch (c) {
        case FaultClass::drop_key: return "drop_key";
        case FaultClass::bad_fact_id: return "bad_fact_id";
        case FaultClass::ghost_feature: return "ghost_feature";
        case FaultClass::wrong_row: return "wrong_row";
        case FaultClass::direction_flip: return "direction_flip";
        case FaultClass::non_json: return "non_json";
    }
    return "non_json";
}

std::optional<FaultClass> fault_class_from_string(const std::string& text) {
    for (FaultClass c : {FaultClass::drop_key, FaultClass::bad_fact_id, FaultClass::ghost_feature,
                         FaultClass::wrong_row, FaultClass::direction_flip, FaultClass::non_json}) {
        if (text == to_string(c)) return c;
    }
    return std::nullopt;
}

FaultBackend::FaultBackend(std::unique_ptr<AnswerBackend> inner, FaultSpec spec)
    : inner_(std::move(inner)), spec_(spec) {
    if (spec_.rate < 0.0 || spec_.rate > 1.0)
        throw std::invalid_argument("fault rate must be in [0, 1]");
}

std::string FaultBackend::name() const {
    return "fault(" + std::string(to_string(spec_.corruption)) + ")";
}

bool FaultBackend::corrupts(const std::string& qa_id) const {
    SplitMix64 rng(hash64(qa_id, spec_.seed));
    return rng.uniform() < spec_.rate;
}

std::string FaultBackend::answer(const Prompt& prompt, const QAInstance& qa) {
    std::string clean = inner_->answer(prompt, qa);
    if (!corrupts(qa.qa_id)) return clean;

    SplitMix64 rng(hash64(qa.qa_id, spec_.seed ^ 0xfa017ULL));
    if (spec_.corruption == FaultClass::non_json) {
        return "The asset looks degraded; I would inspect it soon. (unstructured response for " +
               qa.qa_id + ")";
    }

    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(clean);
    } catch (const nlohmann::json::exception&) {
        return clean;  // inner already non-JSON; nothing further to corrupt
    }
    switch (spec_.corruption) {
        case FaultClass::drop_key: {
            static const char* keys[] = {"direct_answer", "reasoning_answer", "provenance",
                                         "confidence"};
            j.erase(keys[rng.below(4)]);
            break;
        }
        case FaultClass::bad_fact_id:
            if (j.contains("provenance"))
                j["provenance"]["fact_id"] =
                    "ghost_" + j["provenance"].value("fact_id", std::string("fact"));
            break;
        case FaultClass::ghost_feature:
            if (j.contains("provenance")) {
                if (!j["provenance"].contains("features"))
                    j["provenance"]["features"] = nlohmann::ordered_json::array();
                j["provenance"]["features"].push_back("ghost_feature");
            }
            break;
        case FaultClass::wrong_row:
            if (j.contains("provenance"))
                j["provenance"]["row"] = j["provenance"].value("row", 0) + 1;
            break;
        case FaultClass::direction_flip:
            if (j.contains("counterfactual")) {
                auto& cf = j["counterfactual"];
                std::string dir = cf.value("direction", "decrease");
                cf["direction"] = dir == "decrease" ? "increase" : "decrease";
                if (cf.contains("risk_before") && cf.contains("risk_after")) {
                    auto tmp = cf["risk_before"];
                    cf["risk_before"] = cf["risk_after"];
                    cf["risk_after"] = tmp;
                }
            }
            break;
        case FaultClass::non_json:
            break;
    }
    return j.dump();
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw std::invalid_argument("remote backend needs a URL");
}

std::string RemoteBackend::answer(const Prompt& prompt, const QAInstance& qa) {
    // Split http://host:port/path into client target and request path.
    std::string url = config_.url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::runtime_error("invalid URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    client.set_connection_timeout(static_cast<int>(config_.timeout_seconds),
                                  static_cast<int>((config_.timeout_seconds -
                                                    static_cast<int>(config_.timeout_seconds)) *
                                                   1e6));
    client.set_read_timeout(static_cast<int>(config_.timeout_seconds), 0);
    httplib::Headers headers;
    for (const auto& [k, v] : config_.headers) headers.emplace(k, v);

    nlohmann::ordered_json body;
    body["system"] = prompt.system_text;
    body["user"] = prompt.user_text;
    body["params"] = {{"qa_id", qa.qa_id}};

    std::string payload = body.dump();
    int attempts = 0;
    std::string last_error;
    for (; attempts <= config_.max_retries; ++attempts) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) return res->body;
        last_error = res ? "HTTP " + std::to_string(res->status)
                         : "transport error " + httplib::to_string(res.error());
    }
    throw std::runtime_error("remote backend failed after " + std::to_string(attempts) +
                             " attempts: " + last_error);
}

}  // namespace opsqa
