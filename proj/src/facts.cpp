#include "opsqa/facts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "opsqa/csv.hpp"

namespace opsqa {

namespace {

const char* kSensorSuffixes[] = {"_mean", "_std", "_min", "_max", "_trend"};

nlohmann::ordered_json profile_to_json(const FailureProfile& p) {
    nlohmann::ordered_json iso;
    iso["failure_mode"] = p.failure_label;
    iso["name"] = p.display_name;
    iso["description"] = p.description;
    iso["equipment_category"] = p.equipment_category;
    iso["associated_sensors"] = p.associated_sensors;
    iso["typical_indicators"] = p.typical_indicators;
    iso["recommended_actions"] = p.recommended_actions;
    iso["severity"] = to_string(p.severity);
    nlohmann::ordered_json j;
    j["failure_label"] = p.failure_label;
    j["display_name"] = p.display_name;
    j["iso_metadata"] = std::move(iso);
    return j;
}

FailureProfile profile_from_json(const nlohmann::json& j) {
    FailureProfile p;
    p.failure_label = j.value("failure_label", "");
    p.display_name = j.value("display_name", "");
    if (j.contains("iso_metadata")) {
        const auto& iso = j["iso_metadata"];
        p.display_name = iso.value("name", p.display_name);
        p.description = iso.value("description", "");
        p.equipment_category = iso.value("equipment_category", "");
        if (iso.contains("associated_sensors"))
            p.associated_sensors = iso["associated_sensors"].get<std::vector<std::string>>();
        if (iso.contains("typical_indicators"))
            for (auto it = iso["typical_indicators"].begin(); it != iso["typical_indicators"].end(); ++it)
                p.typical_indicators[it.key()] = it.value().get<std::string>();
        if (iso.contains("recommended_actions"))
            p.recommended_actions = iso["recommended_actions"].get<std::vector<std::string>>();
        if (auto sev = severity_from_string(iso.value("severity", ""))) p.severity = *sev;
    }
    return p;
}

nlohmann::ordered_json asset_to_json(const AssetProfile& p) {
    nlohmann::ordered_json j;
    j["asset_name"] = p.asset_name;
    if (!p.equipment_category.empty()) j["equipment_category"] = p.equipment_category;
    if (!p.equipment_class_type.empty()) j["equipment_class_type"] = p.equipment_class_type;
    if (!p.unit_subunit.empty()) j["unit_subunit"] = p.unit_subunit;
    return j;
}

AssetProfile asset_from_json(const nlohmann::json& j) {
    AssetProfile p;
    p.asset_name = j.value("asset_name", "");
    p.equipment_category = j.value("equipment_category", "");
    p.equipment_class_type = j.value("equipment_class_type", "");
    if (j.contains("unit_subunit")) p.unit_subunit = j["unit_subunit"].get<std::vector<std::string>>();
    return p;
}

}  // namespace

std::optional<double> parse_numeric_literal(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (...) {
        return std::nullopt;
    }
    if (used != text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<double> EpisodeFact::feature(const std::string& name) const {
    for (const auto& f : features) {
        if (f.name == name) return f.value;
    }
    return std::nullopt;
}

bool EpisodeFact::has_feature(const std::string& name) const {
    return std::any_of(features.begin(), features.end(),
                       [&](const NamedFeature& f) { return f.name == name; });
}

std::vector<std::string> EpisodeFact::sensor_names() const {
    std::vector<std::string> out;
    for (const auto& f : features) {
        if (f.name.size() > 5 && f.name.rfind("_mean") == f.name.size() - 5) {
            std::string sensor = f.name.substr(0, f.name.size() - 5);
            // exclude non-sensor aggregates sharing the suffix shape
            bool all = true;
            for (const char* suffix : kSensorSuffixes) {
                if (!has_feature(sensor + suffix)) {
                    all = false;
                    break;
                }
            }
            if (all) out.push_back(sensor);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

nlohmann::ordered_json fact_to_json(const EpisodeFact& fact) {
    nlohmann::ordered_json j;
    j["fact_id"] = fact.fact_id;
    j["dataset"] = fact.dataset;
    j["source_file"] = fact.source_file;
    j["asset_id"] = fact.asset_id;
    j["machineID"] = fact.machine_id;
    j["episode_type"] = fact.failure_window ? "failure_window" : "healthy_window";
    if (fact.failure_component) j["failure_component"] = *fact.failure_component;
    if (fact.failure_time) j["failure_time"] = format_timestamp(*fact.failure_time);
    j["start_time"] = format_timestamp(fact.start_time);
    j["end_time"] = format_timestamp(fact.end_time);
    j["label"] = fact.label;
    nlohmann::ordered_json feats = nlohmann::ordered_json::array();
    for (const auto& f : fact.features) {
        nlohmann::ordered_json fj;
        fj["name"] = f.name;
        if (f.value) {
            fj["value"] = *f.value;
        } else if (f.text) {
            fj["value"] = *f.text;
        } else {
            fj["value"] = nullptr;
        }
        feats.push_back(std::move(fj));
    }
    j["features"] = std::move(feats);
    if (fact.asset_profile) j["asset_profile"] = asset_to_json(*fact.asset_profile);
    if (fact.failure_profile) j["failure_profile"] = profile_to_json(*fact.failure_profile);
    if (!fact.sensor_profiles.empty()) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& sp : fact.sensor_profiles) {
            arr.push_back({{"sensor_name", sp.sensor_name}, {"description", sp.description}});
        }
        j["sensor_profiles"] = std::move(arr);
    }
    nlohmann::ordered_json prov;
    prov["telemetry_source_file"] = fact.provenance.telemetry_source_file;
    prov["telemetry_time_range"] = {format_timestamp(fact.provenance.range_start),
                                    format_timestamp(fact.provenance.range_end)};
    if (fact.provenance.failure_source_file)
        prov["failure_source_file"] = *fact.provenance.failure_source_file;
    if (fact.provenance.failure_index) prov["failure_index"] = *fact.provenance.failure_index;
    prov["errors_source_file"] = fact.provenance.errors_source_file;
    prov["maint_source_file"] = fact.provenance.maint_source_file;
    prov["machines_source_file"] = fact.provenance.machines_source_file;
    prov["telemetry_points_in_window"] = fact.provenance.telemetry_points_in_window;
    prov["errors_in_window"] = fact.provenance.errors_in_window;
    prov["maint_events_in_window"] = fact.provenance.maint_events_in_window;
    j["provenance"] = std::move(prov);
    j["row_index"] = fact.row_index;
    return j;
}

EpisodeFact fact_from_json(const nlohmann::json& j) {
    EpisodeFact fact;
    fact.fact_id = j.value("fact_id", "");
    fact.dataset = j.value("dataset", "");
    fact.source_file = j.value("source_file", "");
    fact.asset_id = j.value("asset_id", "");
    fact.machine_id = j.value("machineID", 0);
    fact.failure_window = j.value("episode_type", "") == "failure_window";
    if (j.contains("failure_component") && !j["failure_component"].is_null())
        fact.failure_component = j["failure_component"].get<std::string>();
    if (j.contains("failure_time") && !j["failure_time"].is_null())
        fact.failure_time = parse_timestamp(j["failure_time"].get<std::string>()).value_or(0);
    fact.start_time = parse_timestamp(j.value("start_time", "")).value_or(0);
    fact.end_time = parse_timestamp(j.value("end_time", "")).value_or(0);
    fact.label = j.value("label", "");
    if (j.contains("features")) {
        for (const auto& fj : j["features"]) {
            NamedFeature f;
            f.name = fj.value("name", "");
            if (fj.contains("value")) {
                const auto& v = fj["value"];
                if (v.is_number()) {
                    f.value = v.get<double>();
                } else if (v.is_string()) {
                    std::string s = v.get<std::string>();
                    if (auto num = parse_numeric_literal(s)) {
                        f.value = *num;
                    } else {
                        f.text = std::move(s);
                    }
                }
            }
            fact.features.push_back(std::move(f));
        }
    }
    if (j.contains("asset_profile")) fact.asset_profile = asset_from_json(j["asset_profile"]);
    if (j.contains("failure_profile")) fact.failure_profile = profile_from_json(j["failure_profile"]);
    if (j.contains("sensor_profiles")) {
        for (const auto& sj : j["sensor_profiles"]) {
            fact.sensor_profiles.push_back(
                {sj.value("sensor_name", ""), sj.value("description", "")});
        }
    }
    if (j.contains("provenance")) {
        const auto& prov = j["provenance"];
        fact.provenance.telemetry_source_file = prov.value("telemetry_source_file", "");
        if (prov.contains("telemetry_time_range") && prov["telemetry_time_range"].size() == 2) {
            fact.provenance.range_start =
                parse_timestamp(prov["telemetry_time_range"][0].get<std::string>()).value_or(0);
            fact.provenance.range_end =
                parse_timestamp(prov["telemetry_time_range"][1].get<std::string>()).value_or(0);
        }
        if (prov.contains("failure_source_file"))
            fact.provenance.failure_source_file = prov["failure_source_file"].get<std::string>();
        if (prov.contains("failure_index"))
            fact.provenance.failure_index = prov["failure_index"].get<std::int64_t>();
        fact.provenance.errors_source_file = prov.value("errors_source_file", "");
        fact.provenance.maint_source_file = prov.value("maint_source_file", "");
        fact.provenance.machines_source_file = prov.value("machines_source_file", "");
        fact.provenance.telemetry_points_in_window = prov.value("telemetry_points_in_window", 0);
        fact.provenance.errors_in_window = prov.value("errors_in_window", 0);
        fact.provenance.maint_events_in_window = prov.value("maint_events_in_window", 0);
    }
    fact.row_index = j.value("row_index", 0);
    return fact;
}

void write_facts_jsonl(const std::vector<EpisodeFact>& facts, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path, 0, "cannot open for writing");
    for (const auto& fact : facts) out << fact_to_json(fact).dump() << "\n";
}

std::vector<EpisodeFact> read_facts_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, "cannot open file");
    std::vector<EpisodeFact> facts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            facts.push_back(fact_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path, line_no, std::string("invalid fact JSON: ") + e.what());
        }
    }
    return facts;
}

}  // namespace opsqa
