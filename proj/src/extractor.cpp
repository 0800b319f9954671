#include "opsqa/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "opsqa/csv.hpp"

namespace opsqa {

namespace {

Timestamp parse_time_cell(const CsvTable& t, std::size_t row, std::size_t col) {
    auto ts = parse_timestamp(t.rows[row][col]);
    if (!ts) throw ParseError(t.path, row + 2, "unparseable timestamp '" + t.rows[row][col] + "'");
    return *ts;
}

std::int64_t parse_int_cell(const CsvTable& t, std::size_t row, std::size_t col) {
    try {
        return std::stoll(t.rows[row][col]);
    } catch (...) {
        throw ParseError(t.path, row + 2, "expected integer, got '" + t.rows[row][col] + "'");
    }
}

std::optional<double> parse_num_cell(const CsvTable& t, std::size_t row, std::size_t col) {
    const std::string& cell = t.rows[row][col];
    if (cell.empty()) return std::nullopt;
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(cell, &used);
    } catch (...) {
        throw ParseError(t.path, row + 2, "expected number, got '" + cell + "'");
    }
    if (used != cell.size()) throw ParseError(t.path, row + 2, "expected number, got '" + cell + "'");
    return v;
}

double window_hours_to_seconds(double hours) { return hours * kSecondsPerHour; }

struct WindowSlice {
    std::int64_t machine = 0;
    Timestamp start = 0;  // exclusive
    Timestamp end = 0;    // inclusive
};

// Builds the engineered feature vector for one window.
std::vector<NamedFeature> build_features(const RawTables& tables, const ExtractorConfig& cfg,
                                         const WindowSlice& w, Provenance& prov) {
    std::vector<NamedFeature> features;

    std::map<std::string, std::vector<std::pair<Timestamp, double>>> series;
    std::int64_t points = 0;
    auto tm = tables.telemetry.find(w.machine);
    if (tm != tables.telemetry.end()) {
        for (const auto& row : tm->second) {
            if (row.time <= w.start || row.time > w.end) continue;
            ++points;
            for (const auto& col : tables.sensor_columns) {
                auto it = row.sensors.find(col);
                if (it != row.sensors.end() && it->second)
                    series[col].emplace_back(row.time, *it->second);
            }
        }
    }
    prov.telemetry_points_in_window = points;

    for (const auto& col : tables.sensor_columns) {
        SensorDescriptors d = sensor_descriptors(series[col], cfg.trend_on_elapsed_hours);
        features.push_back({col + "_mean", d.mean});
        features.push_back({col + "_std", d.std});
        features.push_back({col + "_min", d.min});
        features.push_back({col + "_max", d.max});
        features.push_back({col + "_trend", d.trend});
    }

    std::int64_t error_count = 0;
    std::set<std::string> error_types;
    auto em = tables.errors.find(w.machine);
    if (em != tables.errors.end()) {
        for (const auto& ev : em->second) {
            if (ev.time <= w.start || ev.time > w.end) continue;
            ++error_count;
            error_types.insert(ev.id);
        }
    }
    prov.errors_in_window = error_count;
    features.push_back({"error_count_last_window", static_cast<double>(error_count)});
    features.push_back(
        {"distinct_error_types_last_window", static_cast<double>(error_types.size())});

    // Maintenance recency per component seen in this machine's history, plus
    // the most recent event of any kind. Events exactly at the window end
    // (e.g. the repair that accompanies a failure row) do not count as prior
    // maintenance. -1 is the no-prior-event sentinel.
    std::int64_t maint_in_window = 0;
    std::map<std::string, Timestamp> last_by_comp;
    std::optional<Timestamp> last_any;
    auto mm = tables.maint.find(w.machine);
    if (mm != tables.maint.end()) {
        for (const auto& ev : mm->second) {
            if (ev.time > w.start && ev.time <= w.end) ++maint_in_window;
            if (ev.time < w.end) {
                auto it = last_by_comp.find(ev.id);
                if (it == last_by_comp.end() || ev.time > it->second) last_by_comp[ev.id] = ev.time;
                if (!last_any || ev.time > *last_any) last_any = ev.time;
            }
        }
        std::set<std::string> comps;
        for (const auto& ev : mm->second) comps.insert(ev.id);
        for (const auto& comp : comps) {
            auto it = last_by_comp.find(comp);
            double hours = it == last_by_comp.end() ? -1.0 : hours_between(it->second, w.end);
            features.push_back({"hours_since_last_maint_" + comp, hours});
        }
    }
    prov.maint_events_in_window = maint_in_window;
    features.push_back(
        {"hours_since_last_maint_any", last_any ? hours_between(*last_any, w.end) : -1.0});

    auto mi = tables.machines.find(w.machine);
    if (mi != tables.machines.end()) {
        features.push_back({"machine_age", mi->second.age});
        if (!mi->second.model.empty())
            features.push_back({"model_" + mi->second.model, 1.0});
    }
    return features;
}

EpisodeFact make_fact(const RawTables& tables, const ExtractorConfig& cfg,
                      std::int64_t machine, Timestamp window_end,
                      const std::optional<FailureRow>& failure, std::int64_t row_index) {
    EpisodeFact fact;
    fact.dataset = cfg.dataset;
    fact.source_file = path_basename(tables.telemetry_file);
    fact.asset_id = "machine_" + std::to_string(machine);
    fact.machine_id = machine;
    fact.end_time = window_end;
    fact.start_time = window_end - static_cast<Timestamp>(window_hours_to_seconds(cfg.window_hours));
    fact.failure_window = failure.has_value();
    fact.row_index = row_index;

    WindowSlice w{machine, fact.start_time, fact.end_time};
    fact.provenance.telemetry_source_file = path_basename(tables.telemetry_file);
    fact.provenance.range_start = fact.start_time;
    fact.provenance.range_end = fact.end_time;
    fact.provenance.errors_source_file = path_basename(tables.errors_file);
    fact.provenance.maint_source_file = path_basename(tables.maint_file);
    fact.provenance.machines_source_file = path_basename(tables.machines_file);
    fact.features = build_features(tables, cfg, w, fact.provenance);

    if (failure) {
        fact.failure_component = failure->component;
        fact.failure_time = failure->time;
        fact.label = failure->component;
        fact.provenance.failure_source_file = path_basename(tables.failures_file);
        fact.provenance.failure_index = failure->index;
        fact.fact_id = cfg.dataset + "_m" + std::to_string(machine) + "_" + failure->component +
                       "_" + format_hour_key(window_end);
    } else {
        fact.label = "healthy";
        fact.fact_id = cfg.dataset + "_m" + std::to_string(machine) + "_healthy_" +
                       format_hour_key(window_end);
    }
    return fact;
}

}  // namespace

RawTables load_tables(const std::string& telemetry, const std::string& failures,
                      const std::string& errors, const std::string& maint,
                      const std::string& machines) {
    RawTables tables;
    tables.telemetry_file = telemetry;
    tables.failures_file = failures;
    tables.errors_file = errors;
    tables.maint_file = maint;
    tables.machines_file = machines;

    {
        CsvTable t = read_csv(telemetry);
        std::size_t c_time = t.column("datetime");
        std::size_t c_machine = t.column("machineID");
        for (std::size_t i = 0; i < t.header.size(); ++i) {
            if (i != c_time && i != c_machine) tables.sensor_columns.push_back(t.header[i]);
        }
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            TelemetryRow row;
            row.time = parse_time_cell(t, r, c_time);
            std::int64_t machine = parse_int_cell(t, r, c_machine);
            for (std::size_t i = 0; i < t.header.size(); ++i) {
                if (i == c_time || i == c_machine) continue;
                row.sensors[t.header[i]] = parse_num_cell(t, r, i);
            }
            tables.telemetry[machine].push_back(std::move(row));
        }
        for (auto& [_, rows] : tables.telemetry) {
            std::stable_sort(rows.begin(), rows.end(),
                             [](const TelemetryRow& a, const TelemetryRow& b) { return a.time < b.time; });
        }
    }
    {
        CsvTable t = read_csv(failures);
        std::size_t c_time = t.column("datetime");
        std::size_t c_machine = t.column("machineID");
        std::size_t c_failure = t.column("failure");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            FailureRow row;
            row.time = parse_time_cell(t, r, c_time);
            row.component = t.rows[r][c_failure];
            row.index = static_cast<std::int64_t>(r);
            tables.failures[parse_int_cell(t, r, c_machine)].push_back(std::move(row));
        }
        for (auto& [_, rows] : tables.failures) {
            std::stable_sort(rows.begin(), rows.end(),
                             [](const FailureRow& a, const FailureRow& b) { return a.time < b.time; });
        }
    }
    auto load_events = [](const std::string& path, const char* id_col,
                          std::map<std::int64_t, std::vector<EventRow>>& out) {
        CsvTable t = read_csv(path);
        std::size_t c_time = t.column("datetime");
        std::size_t c_machine = t.column("machineID");
        std::size_t c_id = t.column(id_col);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            EventRow row;
            row.time = parse_time_cell(t, r, c_time);
            row.id = t.rows[r][c_id];
            out[parse_int_cell(t, r, c_machine)].push_back(std::move(row));
        }
        for (auto& [_, rows] : out) {
            std::stable_sort(rows.begin(), rows.end(),
                             [](const EventRow& a, const EventRow& b) { return a.time < b.time; });
        }
    };
    load_events(errors, "errorID", tables.errors);
    load_events(maint, "comp", tables.maint);
    {
        CsvTable t = read_csv(machines);
        std::size_t c_machine = t.column("machineID");
        std::size_t c_model = t.column("model");
        std::size_t c_age = t.column("age");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            MachineInfo info;
            info.machine_id = parse_int_cell(t, r, c_machine);
            info.model = t.rows[r][c_model];
            info.age = parse_num_cell(t, r, c_age);
            tables.machines[info.machine_id] = std::move(info);
        }
    }
    return tables;
}

SensorDescriptors sensor_descriptors(const std::vector<std::pair<Timestamp, double>>& series,
                                     bool trend_on_elapsed_hours) {
    SensorDescriptors d;
    const std::size_t n = series.size();
    if (n == 0) return d;

    double sum = 0.0, lo = series[0].second, hi = series[0].second;
    for (const auto& [_, v] : series) {
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& [_, v] : series) ss += (v - mean) * (v - mean);

    d.mean = mean;
    d.std = std::sqrt(ss / static_cast<double>(n));
    d.min = lo;
    d.max = hi;

    if (n >= 2) {
        double xbar = 0.0;
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = trend_on_elapsed_hours
                        ? hours_between(series[0].first, series[i].first)
                        : static_cast<double>(i);
            xbar += xs[i];
        }
        xbar /= static_cast<double>(n);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (xs[i] - xbar) * (series[i].second - mean);
            sxx += (xs[i] - xbar) * (xs[i] - xbar);
        }
        if (sxx > 0.0) d.trend = sxy / sxx;
    }
    return d;
}

std::vector<EpisodeFact> extract_failure_episodes(const RawTables& tables,
                                                  const ExtractorConfig& cfg) {
    std::vector<EpisodeFact> facts;
    for (const auto& [machine, rows] : tables.failures) {
        for (const auto& failure : rows) {
            facts.push_back(make_fact(tables, cfg, machine, failure.time, failure, failure.index));
        }
    }
    return facts;
}

std::vector<EpisodeFact> sample_healthy_episodes(const RawTables& tables,
                                                 const ExtractorConfig& cfg) {
    std::vector<EpisodeFact> facts;
    const auto horizon = static_cast<Timestamp>(window_hours_to_seconds(cfg.horizon_hours));
    for (const auto& [machine, rows] : tables.telemetry) {
        const std::int64_t n = static_cast<std::int64_t>(rows.size());
        if (n == 0 || cfg.max_healthy_per_machine <= 0) continue;
        const std::int64_t stride =
            (n + cfg.max_healthy_per_machine - 1) / cfg.max_healthy_per_machine;
        const std::vector<FailureRow>* failures = nullptr;
        if (auto it = tables.failures.find(machine); it != tables.failures.end())
            failures = &it->second;
        std::int64_t accepted = 0;
        for (std::int64_t i = 0; i < n && accepted < cfg.max_healthy_per_machine; i += stride) {
            const Timestamp center = rows[static_cast<std::size_t>(i)].time;
            bool violated = false;
            if (failures) {
                for (const auto& f : *failures) {
                    if (f.time >= center && f.time <= center + horizon) {
                        violated = true;
                        break;
                    }
                }
            }
            if (violated) continue;
            facts.push_back(make_fact(tables, cfg, machine, center, std::nullopt, i));
            ++accepted;
        }
    }
    return facts;
}

EpisodeFact enrich_with_kg(EpisodeFact fact, const KnowledgeGraph& kg) {
    std::string model;
    for (const auto& f : fact.features) {
        if (f.name.rfind("model_", 0) == 0 && f.value && *f.value == 1.0) {
            model = f.name.substr(6);
            break;
        }
    }
    if (!model.empty()) fact.asset_profile = kg.asset_profile(model);
    if (fact.failure_window) fact.failure_profile = kg.failure_profile(fact.label, model);

    fact.sensor_profiles.clear();
    std::set<std::string> seen;
    for (const auto& f : fact.features) {  // first-appearance order
        if (f.name.size() <= 5 || f.name.rfind("_mean") != f.name.size() - 5) continue;
        std::string sensor = f.name.substr(0, f.name.size() - 5);
        if (!seen.insert(sensor).second) continue;
        if (auto desc = kg.sensor_description(sensor))
            fact.sensor_profiles.push_back({sensor, *desc});
    }
    return fact;
}

std::vector<EpisodeFact> run_extraction(const RawTables& tables, const ExtractorConfig& cfg,
                                        const KnowledgeGraph* kg) {
    std::vector<EpisodeFact> facts = extract_failure_episodes(tables, cfg);
    std::vector<EpisodeFact> healthy = sample_healthy_episodes(tables, cfg);
    facts.insert(facts.end(), std::make_move_iterator(healthy.begin()),
                 std::make_move_iterator(healthy.end()));
    if (kg) {
        for (auto& fact : facts) fact = enrich_with_kg(std::move(fact), *kg);
    }
    std::sort(facts.begin(), facts.end(), [](const EpisodeFact& a, const EpisodeFact& b) {
        return std::tie(a.asset_id, a.end_time, a.fact_id) <
               std::tie(b.asset_id, b.end_time, b.fact_id);
    });
    // fact ids must be unique per output
    std::set<std::string> ids;
    for (auto& fact : facts) {
        std::string id = fact.fact_id;
        int suffix = 2;
        while (!ids.insert(id).second) id = fact.fact_id + "_" + std::to_string(suffix++);
        fact.fact_id = id;
    }
    return facts;
}

}  // namespace opsqa
