#include "opsqa/qa_builder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "opsqa/csv.hpp"

namespace opsqa {

namespace {

const std::pair<const char*, TaskType> kTasks[] = {
    {"descriptive", TaskType::descriptive},
    {"temporal_count", TaskType::temporal_count},
    {"diagnostic", TaskType::diagnostic},
    {"counterfactual", TaskType::counterfactual},
    {"action_recommendation", TaskType::action_recommendation},
};

std::string window_phrase(const EpisodeFact& fact) {
    return format_timestamp(fact.start_time) + " to " + format_timestamp(fact.end_time);
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

nlohmann::ordered_json asset_brief(const EpisodeFact& fact, bool with_subunits) {
    if (!fact.asset_profile) return nullptr;
    nlohmann::ordered_json j;
    const auto& p = *fact.asset_profile;
    if (with_subunits) {
        if (!p.equipment_category.empty()) j["equipment_category"] = p.equipment_category;
        if (!p.equipment_class_type.empty()) j["equipment_class_type"] = p.equipment_class_type;
        if (!p.unit_subunit.empty()) j["unit_subunit"] = p.unit_subunit;
        j["asset_name"] = p.asset_name;
    } else {
        j["asset_name"] = p.asset_name;
        if (!p.equipment_category.empty()) j["equipment_category"] = p.equipment_category;
    }
    return j;
}

nlohmann::ordered_json failure_brief(const EpisodeFact& fact, bool full) {
    if (!fact.failure_profile) return nullptr;
    const auto& p = *fact.failure_profile;
    nlohmann::ordered_json j;
    j["failure_mode"] = full ? p.failure_label : p.display_name;
    j["display_name"] = full ? p.display_name : p.failure_label;
    if (full && !p.description.empty()) j["short_description"] = p.description;
    if (full) j["associated_sensors"] = p.associated_sensors;
    if (full && !p.typical_indicators.empty()) j["typical_indicators"] = p.typical_indicators;
    if (!full) {
        j["severity"] = to_string(p.severity);
        j["associated_sensors"] = p.associated_sensors;
        j["recommended_actions"] = p.recommended_actions;
    } else {
        j["recommended_actions"] = p.recommended_actions;
        j["severity"] = to_string(p.severity);
    }
    return j;
}

std::string display_name_for(const EpisodeFact& fact) {
    if (fact.failure_profile) return fact.failure_profile->display_name;
    return fact.label;
}

}  // namespace

const char* to_string(TaskType t) {
    for (const auto& [name, task] : kTasks)
        if (task == t) return name;
    return "descriptive";
}

std::optional<TaskType> task_type_from_string(const std::string& text) {
    for (const auto& [name, task] : kTasks)
        if (text == name) return task;
    return std::nullopt;
}

const char* task_code(TaskType t) {
    switch (t) {
        case TaskType::descriptive: return "desc";
        case TaskType::temporal_count: return "temp";
        case TaskType::diagnostic: return "diag";
        case TaskType::counterfactual: return "ts_cf";
        case TaskType::action_recommendation: return "ts_action";
    }
    return "desc";
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string format_number_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string render_intervention(const std::map<std::string, double>& intervention) {
    std::vector<std::string> parts;
    for (const auto& [name, value] : intervention) {
        char buf[48];
        if (value == std::floor(value) && std::abs(value) < 1e15) {
            std::snprintf(buf, sizeof(buf), "%.1f", value);
        } else {
            std::snprintf(buf, sizeof(buf), "%.6g", value);
        }
        parts.push_back(name + " = " + buf);
    }
    return "do(" + join(parts, ", ") + ")";
}

std::optional<std::map<std::string, double>> parse_intervention(const std::string& text) {
    if (text.rfind("do(", 0) != 0 || text.empty() || text.back() != ')') return std::nullopt;
    std::string body = text.substr(3, text.size() - 4);
    std::map<std::string, double> out;
    std::stringstream ss(body);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos) return std::nullopt;
        std::string name = part.substr(0, eq);
        std::string value = part.substr(eq + 1);
        auto trim = [](std::string& s) {
            while (!s.empty() && s.front() == ' ') s.erase(s.begin());
            while (!s.empty() && s.back() == ' ') s.pop_back();
        };
        trim(name);
        trim(value);
        auto num = parse_numeric_literal(value);
        if (name.empty() || !num) return std::nullopt;
        out[name] = *num;
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::vector<std::string> top_deviating_features(const EpisodeFact& fact, const RiskModel* model,
                                                std::size_t k) {
    std::vector<std::pair<double, std::string>> scored;
    if (model) {
        const auto& names = model->feature_names();
        for (const auto& f : fact.features) {
            if (!f.value) continue;
            auto it = std::lower_bound(names.begin(), names.end(), f.name);
            if (it == names.end() || *it != f.name) continue;
            std::size_t j = static_cast<std::size_t>(it - names.begin());
            double z = (*f.value - model->centers()[j]) / model->scales()[j];
            scored.emplace_back(-std::abs(z), f.name);
        }
    } else {
        for (const auto& f : fact.features) {
            if (f.value) scored.emplace_back(0.0, f.name);
        }
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && out.size() < k; ++i) out.push_back(scored[i].second);
    return out;
}

BuildOutcome build_qa(const EpisodeFact& fact, TaskType task, const KnowledgeGraph& kg,
                      const RiskModel* model, const ActionPolicy& policy) {
    QAInstance qa;
    qa.fact_id = fact.fact_id;
    qa.task_type = task;
    qa.asset_id = fact.asset_id;
    qa.qa_id = fact.dataset + "_" + task_code(task) + "_" + fact.fact_id;

    nlohmann::ordered_json prov;
    prov["fact_id"] = fact.fact_id;

    switch (task) {
        case TaskType::descriptive: {
            auto sensors = fact.sensor_names();
            if (sensors.empty()) return {std::nullopt, "no sensor aggregates in fact"};
            const std::string sensor = sensors.front();  // first by name order
            auto value = fact.feature(sensor + "_mean");
            if (!value) return {std::nullopt, "feature " + sensor + "_mean is null"};

            std::string desc;
            for (const auto& sp : fact.sensor_profiles) {
                if (sp.sensor_name == sensor) desc = sp.description;
            }
            if (desc.empty()) {
                if (auto d = kg.sensor_description(sensor)) desc = *d;
            }
            qa.question = "During the time window " + window_phrase(fact) + " for asset " +
                          fact.asset_id + ", what was the average " + sensor + " level" +
                          (desc.empty() ? "" : " (" + desc + ")") + "?";
            qa.direct_answer =
                "The average " + sensor + " level was approximately " + format_number(*value) + ".";
            qa.reasoning_answer = "In this episode for asset " + fact.asset_id + ", the feature " +
                                  sensor + "_mean is " + format_number(*value) +
                                  ", computed over " +
                                  std::to_string(fact.provenance.telemetry_points_in_window) +
                                  " telemetry points in the window.";
            qa.label = format_number_label(*value);
            prov["features"] = {sensor + "_mean"};
            prov["file"] = fact.provenance.telemetry_source_file;
            prov["row"] = fact.row_index;
            prov["telemetry_points_in_window"] = fact.provenance.telemetry_points_in_window;
            if (!desc.empty()) prov["sensor_description"] = desc;
            break;
        }
        case TaskType::temporal_count: {
            auto distinct = fact.feature("distinct_error_types_last_window");
            if (!distinct) return {std::nullopt, "distinct_error_types_last_window missing"};
            auto total = fact.feature("error_count_last_window");
            const long long n = std::llround(*distinct);
            qa.question = "Between " + format_timestamp(fact.start_time) + " and " +
                          format_timestamp(fact.end_time) + " for asset " + fact.asset_id +
                          ", how many distinct error types occurred?";
            qa.direct_answer = "There were " + std::to_string(n) +
                               " distinct error types in this window.";
            qa.reasoning_answer =
                "In this episode the feature distinct_error_types_last_window is " +
                std::to_string(n) + ", and the total error count is " +
                std::to_string(total ? std::llround(*total) : 0) + ".";
            qa.label = std::to_string(n);
            prov["features"] = {"error_count_last_window", "distinct_error_types_last_window"};
            prov["file"] = fact.provenance.errors_source_file;
            prov["row"] = fact.row_index;
            break;
        }
        case TaskType::diagnostic: {
            const std::string display = display_name_for(fact);
            qa.question = "Why is this diagnostic episode for asset " + fact.asset_id +
                          " labeled '" + fact.label + "' (" + display + ") over the time window " +
                          window_phrase(fact) + "?";
            auto top = top_deviating_features(fact, model);
            std::vector<std::string> cited;
            for (const auto& name : top) {
                if (auto v = fact.feature(name)) cited.push_back(name + "=" + format_number(*v));
            }
            if (fact.failure_window) {
                qa.direct_answer = "This episode is labeled '" + fact.label + "' (" + display +
                                   ") because the observed features match the typical indicators "
                                   "associated with this failure mode.";
                qa.reasoning_answer =
                    "This episode is labeled '" + fact.label + "' (" + display +
                    ") because, key observed features: " + join(cited, ", ") +
                    ". These features deviate from normal thresholds and sensor patterns and "
                    "match the typical indicators for this failure mode.";
            } else {
                qa.direct_answer = "This episode is labeled '" + fact.label +
                                   "' (" + display +
                                   ") because the observed features remained within normal "
                                   "operating ranges over the window.";
                qa.reasoning_answer =
                    "This episode is labeled '" + fact.label + "' (" + display +
                    ") because, key observed features: " + join(cited, ", ") +
                    ". These features remain within normal operating ranges and no failure was "
                    "recorded in the subsequent horizon.";
            }
            qa.label = fact.label;
            prov["features"] = top;
            prov["file"] = fact.provenance.telemetry_source_file;
            prov["row"] = fact.row_index;
            if (fact.asset_profile) prov["asset_profile"] = asset_brief(fact, false);
            if (fact.failure_profile) prov["failure_profile_id"] = fact.failure_profile->failure_label;
            prov["telemetry_points_in_window"] = fact.provenance.telemetry_points_in_window;
            qa.asset_profile_brief = asset_brief(fact, false);
            qa.failure_profile_brief = failure_brief(fact, false);
            break;
        }
        case TaskType::counterfactual: {
            if (!model) return {std::nullopt, "counterfactual requires a risk model"};
            if (!fact.failure_window)
                return {std::nullopt, "counterfactual requires a failure window"};
            const std::string comp =
                fact.failure_component ? *fact.failure_component : fact.label;
            const std::string feature_name = "hours_since_last_maint_" + comp;
            auto current = fact.feature(feature_name);
            if (!current) return {std::nullopt, feature_name + " missing or null"};

            std::map<std::string, double> intervention{{feature_name, 0.0}};
            CounterfactualResult cf = model->simulate_intervention(fact, intervention);
            if (cf.intervention.empty())
                return {std::nullopt, feature_name + " unknown to the risk model"};

            qa.question = "For asset " + fact.asset_id + " (failure mode: " + comp +
                          ") in the window " + window_phrase(fact) +
                          ", if maintenance targeting " + comp +
                          " had been performed immediately before the window (resetting " +
                          feature_name + " from " + format_number(*current) +
                          " to 0), how would the risk of failure change?";
            switch (cf.direction) {
                case RiskDirection::increase:
                    qa.direct_answer = "The risk of failure would increase.";
                    break;
                case RiskDirection::decrease:
                    qa.direct_answer = "The risk of failure would decrease.";
                    break;
                case RiskDirection::no_change:
                    qa.direct_answer = "The risk of failure would remain approximately unchanged.";
                    break;
            }
            qa.reasoning_answer = "Baseline P(failure) is approximately " +
                                  format_number(cf.risk_before) +
                                  "; after the intervention it is approximately " +
                                  format_number(cf.risk_after) + " (a change of " +
                                  format_number(cf.delta_risk) + ").";
            qa.label = fact.label;
            qa.counterfactual = cf;
            qa.confidence = cf.confidence;
            prov["features"] = {feature_name};
            prov["file"] = fact.provenance.telemetry_source_file;
            prov["row"] = fact.row_index;
            prov["telemetry_points_in_window"] = fact.provenance.telemetry_points_in_window;
            if (fact.asset_profile) {
                nlohmann::ordered_json brief;
                if (!fact.asset_profile->unit_subunit.empty())
                    brief["unit_subunit"] = fact.asset_profile->unit_subunit;
                brief["asset_name"] = fact.asset_profile->asset_name;
                prov["asset_profile_brief"] = std::move(brief);
            }
            if (fact.failure_profile) {
                nlohmann::ordered_json brief;
                brief["failure_mode"] = fact.failure_profile->failure_label;
                brief["recommended_actions"] = fact.failure_profile->recommended_actions;
                brief["severity"] = to_string(fact.failure_profile->severity);
                prov["failure_profile_brief"] = std::move(brief);
            }
            if (!fact.sensor_profiles.empty()) {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const auto& sp : fact.sensor_profiles) {
                    arr.push_back({{"sensor_name", sp.sensor_name}, {"description", sp.description}});
                }
                prov["sensor_profiles_brief"] = std::move(arr);
            }
            break;
        }
        case TaskType::action_recommendation: {
            if (!model) return {std::nullopt, "action recommendation requires a risk model"};
            auto probs = model->predict_proba(fact);
            auto healthy = probs.find("healthy");
            if (healthy == probs.end())
                return {std::nullopt, "risk model has no 'healthy' class"};
            const double risk = 1.0 - healthy->second;
            const bool open = risk >= policy.risk_threshold;

            const std::string category =
                fact.asset_profile && !fact.asset_profile->equipment_category.empty()
                    ? fact.asset_profile->equipment_category
                    : "asset";
            qa.question = "For " + category + " " + fact.asset_id + " in the time window " +
                          window_phrase(fact) +
                          ", should a maintenance work order be opened now, or is it acceptable "
                          "to continue monitoring?";
            qa.direct_answer = open ? "A maintenance work order should be opened now."
                                    : "It is acceptable to continue monitoring.";
            char thr[16];
            std::snprintf(thr, sizeof(thr), "%.2f", policy.risk_threshold);
            std::string reasoning = "The learned risk model estimates probability of any failure "
                                    "at approximately " +
                                    format_number(risk) + " against a work-order threshold of " +
                                    thr + ".";
            if (fact.failure_profile) {
                const auto& p = *fact.failure_profile;
                reasoning += " Failure severity: " + std::string(to_string(p.severity)) + ".";
                if (!p.recommended_actions.empty())
                    reasoning += " Recommended diagnostics/actions: " +
                                 join(p.recommended_actions, "; ") + ".";
                if (!p.associated_sensors.empty())
                    reasoning += " Most informative sensors: " + join(p.associated_sensors, ", ") + ".";
            } else {
                reasoning += open ? " No failure profile is available for this label; escalate "
                                    "for inspection."
                                  : " No active failure mode is indicated; routine monitoring "
                                    "suffices.";
            }
            if (fact.asset_profile && !fact.asset_profile->equipment_class_type.empty())
                reasoning += " Equipment class/type: " + fact.asset_profile->equipment_class_type + ".";
            qa.reasoning_answer = reasoning;
            qa.label = open ? "open_work_order" : "continue_monitoring";
            qa.risk = risk;
            qa.probs_before = probs;
            qa.confidence = 0.5 + 0.5 * std::min(1.0, std::abs(risk - 0.5) / 0.5);

            std::vector<std::string> all_names;
            for (const auto& f : fact.features) all_names.push_back(f.name);
            prov["features"] = all_names;
            prov["file"] = fact.provenance.telemetry_source_file;
            prov["row"] = fact.row_index;
            prov["telemetry_points_in_window"] = fact.provenance.telemetry_points_in_window;
            prov["errors_in_window"] = fact.provenance.errors_in_window;
            if (fact.failure_profile) prov["failure_profile_id"] = fact.failure_profile->failure_label;
            if (fact.asset_profile) prov["asset_profile_brief"] = asset_brief(fact, true);
            if (fact.failure_profile) prov["failure_profile_brief"] = failure_brief(fact, true);
            qa.asset_profile_brief = asset_brief(fact, true);
            qa.failure_profile_brief = failure_brief(fact, true);
            break;
        }
    }

    qa.provenance = std::move(prov);
    return {std::move(qa), ""};
}

std::vector<QAInstance> build_corpus(const std::vector<EpisodeFact>& facts,
                                     const KnowledgeGraph& kg, const RiskModel* model,
                                     const std::vector<TaskType>& tasks,
                                     const ActionPolicy& policy, CorpusStats* stats) {
    std::vector<QAInstance> out;
    for (const auto& fact : facts) {
        for (TaskType task : tasks) {
            BuildOutcome outcome = build_qa(fact, task, kg, model, policy);
            if (outcome.instance) {
                if (stats) ++stats->built_per_task[to_string(task)];
                out.push_back(std::move(*outcome.instance));
            } else if (stats) {
                stats->skipped.push_back({fact.fact_id, task, outcome.skip_reason});
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const QAInstance& a, const QAInstance& b) { return a.qa_id < b.qa_id; });
    return out;
}

std::vector<std::string> QAInstance::cited_features() const {
    std::vector<std::string> out;
    if (provenance.contains("features")) {
        for (const auto& f : provenance["features"]) out.push_back(f.get<std::string>());
    }
    return out;
}

nlohmann::ordered_json qa_to_json(const QAInstance& qa) {
    nlohmann::ordered_json j;
    j["qa_id"] = qa.qa_id;
    j["fact_id"] = qa.fact_id;
    j["task_type"] = to_string(qa.task_type);
    j["question"] = qa.question;
    j["direct_answer"] = qa.direct_answer;
    j["reasoning_answer"] = qa.reasoning_answer;
    j["provenance"] = qa.provenance;
    if (qa.counterfactual) {
        const auto& cf = *qa.counterfactual;
        nlohmann::ordered_json c;
        c["intervention"] = render_intervention(cf.intervention);
        c["risk_before"] = cf.risk_before;
        c["risk_after"] = cf.risk_after;
        c["delta_risk"] = cf.delta_risk;
        c["direction"] = to_string(cf.direction);
        c["probs_before"] = cf.probs_before;
        c["probs_after"] = cf.probs_after;
        j["counterfactual"] = std::move(c);
        j["confidence"] = qa.confidence.value_or(cf.confidence);
    }
    j["label"] = qa.label;
    j["asset_id"] = qa.asset_id;
    if (qa.task_type == TaskType::action_recommendation) {
        if (qa.confidence) j["confidence_estimator"] = *qa.confidence;
        if (qa.risk) j["risk"] = *qa.risk;
        if (qa.probs_before) j["probs_before"] = *qa.probs_before;
    }
    if (!qa.asset_profile_brief.is_null()) j["asset_profile_brief"] = qa.asset_profile_brief;
    if (!qa.failure_profile_brief.is_null()) j["failure_profile_brief"] = qa.failure_profile_brief;
    return j;
}

QAInstance qa_from_json(const nlohmann::json& j) {
    QAInstance qa;
    qa.qa_id = j.value("qa_id", "");
    qa.fact_id = j.value("fact_id", "");
    qa.task_type = task_type_from_string(j.value("task_type", "")).value_or(TaskType::descriptive);
    qa.question = j.value("question", "");
    qa.direct_answer = j.value("direct_answer", "");
    qa.reasoning_answer = j.value("reasoning_answer", "");
    if (j.contains("provenance")) qa.provenance = j["provenance"];
    qa.label = j.value("label", "");
    qa.asset_id = j.value("asset_id", "");
    if (j.contains("counterfactual")) {
        const auto& c = j["counterfactual"];
        CounterfactualResult cf;
        if (auto iv = parse_intervention(c.value("intervention", ""))) cf.intervention = *iv;
        cf.risk_before = c.value("risk_before", 0.0);
        cf.risk_after = c.value("risk_after", 0.0);
        cf.delta_risk = c.value("delta_risk", 0.0);
        cf.direction = direction_from_string(c.value("direction", "no_change"))
                           .value_or(RiskDirection::no_change);
        if (c.contains("probs_before"))
            cf.probs_before = c["probs_before"].get<std::map<std::string, double>>();
        if (c.contains("probs_after"))
            cf.probs_after = c["probs_after"].get<std::map<std::string, double>>();
        cf.confidence = j.value("confidence", 0.5);
        qa.counterfactual = std::move(cf);
    }
    if (j.contains("confidence")) qa.confidence = j["confidence"].get<double>();
    if (j.contains("confidence_estimator")) qa.confidence = j["confidence_estimator"].get<double>();
    if (j.contains("risk")) qa.risk = j["risk"].get<double>();
    if (j.contains("probs_before") && qa.task_type == TaskType::action_recommendation)
        qa.probs_before = j["probs_before"].get<std::map<std::string, double>>();
    if (j.contains("asset_profile_brief")) qa.asset_profile_brief = j["asset_profile_brief"];
    if (j.contains("failure_profile_brief")) qa.failure_profile_brief = j["failure_profile_brief"];
    return qa;
}

void write_qa_jsonl(const std::vector<QAInstance>& instances, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path, 0, "cannot open for writing");
    for (const auto& qa : instances) out << qa_to_json(qa).dump() << "\n";
}

std::vector<QAInstance> read_qa_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::vector<QAInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(qa_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, line_no, std::string("invalid QA JSON: ") + e.what());
        }
    }
    return out;
}

}  // namespace opsqa
