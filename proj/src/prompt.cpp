#include "opsqa/prompt.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace opsqa {

namespace {

const char* task_heading(TaskType t) {
    switch (t) {
        case TaskType::descriptive: return "Descriptive";
        case TaskType::temporal_count: return "Temporal / Counting";
        case TaskType::diagnostic: return "Diagnostic";
        case TaskType::counterfactual: return "Counterfactual";
        case TaskType::action_recommendation: return "Action recommendation";
    }
    return "Descriptive";
}

const char* task_description(TaskType t) {
    switch (t) {
        case TaskType::descriptive:
            return "You must answer descriptive questions about sensor aggregates in the episode "
                   "window.\nUse only the evidence; do not invent features or events.";
        case TaskType::temporal_count:
            return "You must answer counting questions about events inside the episode window.\n"
                   "Use only the evidence; do not invent features or events.";
        case TaskType::diagnostic:
            return "You must answer diagnostic questions explaining why the episode has the given "
                   "label.\nUse only the evidence; do not invent features or events.";
        case TaskType::counterfactual:
            return "You must answer what-if questions about how failure risk changes under the "
                   "stated intervention.\nUse only the evidence and the supplied risk estimates; "
                   "do not invent features or events.";
        case TaskType::action_recommendation:
            return "You must recommend either opening a maintenance work order or continuing to "
                   "monitor.\nUse only the evidence and the supplied risk estimates; do not "
                   "invent features or events.";
    }
    return "";
}

bool needs_counterfactual_block(TaskType t) { return t == TaskType::counterfactual; }

}  // namespace

Prompt build_prompt(const EpisodeFact& fact, const QAInstance& qa, const PromptOptions& options) {
    if (qa.fact_id != fact.fact_id)
        throw std::invalid_argument("QA instance does not reference this fact");

    Prompt prompt;
    prompt.qa_id = qa.qa_id;
    prompt.fact_id = qa.fact_id;

    std::string system =
        "You are an industrial operational intelligence assistant answering questions about one "
        "asset episode.\nBase every statement strictly on the evidence supplied in the user "
        "message.";
    if (options.enforce_contract) {
        system +=
            "\nReturn ONLY a single JSON object with keys: direct_answer, reasoning_answer, "
            "provenance, confidence.";
        if (needs_counterfactual_block(qa.task_type)) {
            system +=
                "\nAlso include a counterfactual object with numeric risk_before and risk_after "
                "and a direction label consistent with those numbers.";
        }
    } else {
        system += "\nAnswer in plain prose.";
    }
    prompt.system_text = system;

    std::string user;
    user += "TASK TYPE: " + std::string(task_heading(qa.task_type)) + "\n\n";
    user += "TASK DESCRIPTION:\n" + std::string(task_description(qa.task_type)) + "\n\n";

    user += "EVIDENCE:\n";
    if (options.include_episodic) {
        user += "fact_id: " + fact.fact_id + "\n";
        user += "asset_id: " + fact.asset_id + "\n";
        user += "window_start: " + format_timestamp(fact.start_time) + "\n";
        user += "window_end:   " + format_timestamp(fact.end_time) + "\n";
        user += "source_file: " + fact.provenance.telemetry_source_file + "\n";
        user += "row_index: " + std::to_string(fact.row_index) + "\n";

        // Gold-cited features first, then the top deviating ones.
        std::vector<std::string> shown = qa.cited_features();
        std::set<std::string> seen(shown.begin(), shown.end());
        for (const auto& name : top_deviating_features(fact, nullptr, 3)) {
            if (seen.insert(name).second) shown.push_back(name);
        }
        user += "diagnostic_features:\n";
        for (const auto& name : shown) {
            auto v = fact.feature(name);
            if (!v) continue;
            user += "  - " + name + ": " + format_number(*v) + "\n";
        }
        user += "telemetry_points_in_window: " +
                std::to_string(fact.provenance.telemetry_points_in_window) + "\n";
    } else {
        // Episodic ablation: a free-form summary with no identifiers and no
        // numeric feature values.
        std::string sensors;
        for (const auto& sp : fact.sensor_names()) {
            if (!sensors.empty()) sensors += ", ";
            sensors += sp;
        }
        user += "Telemetry for one asset episode was recorded";
        if (!sensors.empty()) user += " covering the sensors " + sensors;
        user += "; exact values, identifiers, and record indices are unavailable.\n";
    }

    if (options.include_kg) {
        if (fact.asset_profile) {
            user += "asset_profile:\n";
            user += "  asset_name: " + fact.asset_profile->asset_name + "\n";
            if (!fact.asset_profile->equipment_category.empty())
                user += "  equipment_category: " + fact.asset_profile->equipment_category + "\n";
        }
        if (fact.failure_profile) {
            const auto& p = *fact.failure_profile;
            user += "failure_profile:\n";
            user += "  name: " + p.display_name + "\n";
            user += "  severity: " + std::string(to_string(p.severity)) + "\n";
            std::string sensors;
            for (const auto& s : p.associated_sensors) {
                if (!sensors.empty()) sensors += ", ";
                sensors += s;
            }
            user += "  associated_sensors: [" + sensors + "]\n";
            if (!p.recommended_actions.empty()) {
                user += "  recommended_actions:\n";
                for (const auto& a : p.recommended_actions) user += "    - " + a + "\n";
            }
        }
    }

    if (qa.task_type == TaskType::counterfactual && qa.counterfactual &&
        options.include_episodic) {
        user += "intervention: " + render_intervention(qa.counterfactual->intervention) + "\n";
    }
    if (options.include_simulator) {
        if (qa.task_type == TaskType::counterfactual && qa.counterfactual) {
            user += "risk_estimates:\n";
            user += "  risk_before: " + format_number(qa.counterfactual->risk_before) + "\n";
            user += "  risk_after: " + format_number(qa.counterfactual->risk_after) + "\n";
        } else if (qa.task_type == TaskType::action_recommendation && qa.risk) {
            user += "risk_estimates:\n";
            user += "  risk: " + format_number(*qa.risk) + "\n";
        }
    }

    user += "\nQUESTION:\n" + qa.question + "\n\n";
    user += "RESPONSE FORMAT:\n";
    if (options.enforce_contract) {
        user += "Return ONLY a single JSON object with keys:\n";
        user += "  direct_answer, reasoning_answer, provenance, confidence\n";
        if (needs_counterfactual_block(qa.task_type)) {
            user += "The JSON object must additionally contain a counterfactual object with "
                    "keys:\n  risk_before, risk_after, direction\n";
        }
    } else {
        user += "Answer in free-form prose.\n";
    }

    prompt.user_text = user;
    return prompt;
}

nlohmann::ordered_json prompt_to_json(const Prompt& prompt) {
    nlohmann::ordered_json j;
    j["qa_id"] = prompt.qa_id;
    j["fact_id"] = prompt.fact_id;
    j["system"] = prompt.system_text;
    j["user"] = prompt.user_text;
    return j;
}

}  // namespace opsqa
