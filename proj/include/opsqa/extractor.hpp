#pragma once
// Deterministic episode extraction from the five-table PdM-style CSV corpus.
// Windows are half-open on the left: a failure at t yields (t - window, t].

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opsqa/facts.hpp"
#include "opsqa/kg.hpp"
#include "opsqa/timeutil.hpp"

namespace opsqa {

struct ExtractorConfig {
    double window_hours = 24.0;
    double horizon_hours = 24.0;
    std::int64_t max_healthy_per_machine = 50;
    std::string dataset = "pdm";
    // When true, trend regresses against elapsed hours instead of sample
    // index (for irregularly sampled telemetry).
    bool trend_on_elapsed_hours = false;
};

struct TelemetryRow {
    Timestamp time = 0;
    std::map<std::string, std::optional<double>> sensors;  // column -> value
};

struct FailureRow {
    Timestamp time = 0;
    std::string component;
    std::int64_t index = 0;  // row index in the failures file
};

struct EventRow {
    Timestamp time = 0;
    std::string id;  // errorID or comp
};

struct MachineInfo {
    std::int64_t machine_id = 0;
    std::string model;
    std::optional<double> age;
};

struct RawTables {
    std::string telemetry_file, failures_file, errors_file, maint_file, machines_file;
    std::vector<std::string> sensor_columns;  // telemetry column order
    std::map<std::int64_t, std::vector<TelemetryRow>> telemetry;  // per machine, time-sorted
    std::map<std::int64_t, std::vector<FailureRow>> failures;
    std::map<std::int64_t, std::vector<EventRow>> errors;
    std::map<std::int64_t, std::vector<EventRow>> maint;
    std::map<std::int64_t, MachineInfo> machines;
};

RawTables load_tables(const std::string& telemetry, const std::string& failures,
                      const std::string& errors, const std::string& maint,
                      const std::string& machines);

struct SensorDescriptors {
    std::optional<double> mean, std, min, max, trend;
};

// Sample statistics over an ordered series. std uses the population
// denominator n; trend is the least-squares slope against sample index (or
// elapsed hours). Empty series -> all null; single sample -> trend null.
SensorDescriptors sensor_descriptors(const std::vector<std::pair<Timestamp, double>>& series,
                                     bool trend_on_elapsed_hours = false);

std::vector<EpisodeFact> extract_failure_episodes(const RawTables& tables,
                                                  const ExtractorConfig& cfg);

// Candidate centers are strided deterministically over each machine's
// telemetry timestamps; a center t qualifies iff the machine has no failure
// in [t, t + horizon].
std::vector<EpisodeFact> sample_healthy_episodes(const RawTables& tables,
                                                 const ExtractorConfig& cfg);

EpisodeFact enrich_with_kg(EpisodeFact fact, const KnowledgeGraph& kg);

// Failure + healthy episodes, optionally enriched, sorted by
// (asset_id, end_time). The full extractor pipeline behind the CLI.
std::vector<EpisodeFact> run_extraction(const RawTables& tables, const ExtractorConfig& cfg,
                                        const KnowledgeGraph* kg = nullptr);

}  // namespace opsqa
