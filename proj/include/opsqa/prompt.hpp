#pragma once
// Renders a fact + QA instance into a scoped prompt: evidence block, task
// instruction, and the strict JSON output contract. Byte-deterministic.

#include <string>

#include "opsqa/qa_builder.hpp"

namespace opsqa {

struct PromptOptions {
    bool include_kg = true;         // FMEA context block
    bool include_episodic = true;   // numeric evidence + fact identifiers
    bool enforce_contract = true;   // strict JSON output requirement
    bool include_simulator = true;  // risk estimates for counterfactual/action tasks
};

struct Prompt {
    std::string system_text;
    std::string user_text;
    std::string qa_id;
    std::string fact_id;
};

Prompt build_prompt(const EpisodeFact& fact, const QAInstance& qa, const PromptOptions& options = {});

nlohmann::ordered_json prompt_to_json(const Prompt& prompt);

}  // namespace opsqa
