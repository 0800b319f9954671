#pragma once
// Seeded synthetic telemetry generator emitting the exact five-table PdM CSV
// schema. Failures trigger when a component's hours since maintenance cross
// a per-machine threshold, so risk is monotone in maintenance recency by
// construction.

#include <cstdint>
#include <string>
#include <vector>

namespace opsqa {

struct SyntheticSensor {
    std::string name;
    double healthy_mean = 0.0;
    double noise = 1.0;
    double degrading_shift = 0.0;  // added at the failure threshold, scaled by wear
};

struct SyntheticComponent {
    std::string name;
    std::string sensor;          // sensor that carries this component's signature
    double threshold_hours = 300.0;
    double threshold_jitter = 40.0;  // per-machine, per-cycle uniform jitter
};

struct SyntheticSpec {
    std::int64_t n_machines = 20;
    std::int64_t hours = 2160;
    std::uint64_t seed = 7;
    std::string start_time = "2015-01-01 00:00:00";
    std::vector<SyntheticSensor> sensors = {
        {"volt", 170.0, 6.0, 25.0},
        {"rotate", 450.0, 18.0, -60.0},
        {"pressure", 100.0, 5.0, 30.0},
        {"vibration", 40.0, 2.5, 18.0},
    };
    std::vector<SyntheticComponent> components = {
        {"comp1", "volt", 320.0, 60.0},
        {"comp2", "rotate", 360.0, 70.0},
        {"comp3", "pressure", 300.0, 55.0},
        {"comp4", "vibration", 340.0, 65.0},
    };
    double error_rate_degraded = 0.08;  // per hour, once wear passes 70%
};

struct SyntheticOutputs {
    std::string telemetry, failures, errors, maint, machines;
};

// Writes the five CSVs into `out_dir` (PdM_telemetry.csv, PdM_failures.csv,
// PdM_errors.csv, PdM_maint.csv, PdM_machines.csv). Deterministic per spec.
SyntheticOutputs generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace opsqa
