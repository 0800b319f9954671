#pragma once
// Episode facts: one time-windowed, labeled observation of one asset with
// engineered features, optional KG enrichment, and provenance back to the
// raw tables.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "opsqa/kg.hpp"
#include "opsqa/timeutil.hpp"

namespace opsqa {

struct NamedFeature {
    std::string name;
    std::optional<double> value;  // null signals missing, never 0
    std::optional<std::string> text;  // fallback for non-numeric values
};

// Full-string finite decimal/scientific literal, else nullopt.
std::optional<double> parse_numeric_literal(const std::string& text);

struct Provenance {
    std::string telemetry_source_file;
    Timestamp range_start = 0;
    Timestamp range_end = 0;
    std::optional<std::string> failure_source_file;
    std::optional<std::int64_t> failure_index;
    std::string errors_source_file;
    std::string maint_source_file;
    std::string machines_source_file;
    std::int64_t telemetry_points_in_window = 0;
    std::int64_t errors_in_window = 0;
    std::int64_t maint_events_in_window = 0;
};

struct SensorProfile {
    std::string sensor_name;
    std::string description;
};

struct EpisodeFact {
    std::string fact_id;
    std::string dataset;
    std::string source_file;
    std::string asset_id;
    std::int64_t machine_id = 0;
    bool failure_window = false;  // otherwise healthy_window
    std::optional<std::string> failure_component;
    std::optional<Timestamp> failure_time;
    Timestamp start_time = 0;
    Timestamp end_time = 0;
    std::string label;
    std::vector<NamedFeature> features;
    std::optional<AssetProfile> asset_profile;
    std::optional<FailureProfile> failure_profile;
    std::vector<SensorProfile> sensor_profiles;
    Provenance provenance;
    std::int64_t row_index = 0;

    std::optional<double> feature(const std::string& name) const;
    bool has_feature(const std::string& name) const;
    // Sensor names recovered from `<sensor>_mean` features, sorted.
    std::vector<std::string> sensor_names() const;
};

nlohmann::ordered_json fact_to_json(const EpisodeFact& fact);
EpisodeFact fact_from_json(const nlohmann::json& j);

void write_facts_jsonl(const std::vector<EpisodeFact>& facts, const std::string& path);
std::vector<EpisodeFact> read_facts_jsonl(const std::string& path);

}  // namespace opsqa
