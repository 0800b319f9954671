#include "opsqa/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "opsqa/rng.hpp"
#include "opsqa/timeutil.hpp"

namespace opsqa {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

SyntheticOutputs generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    auto start = parse_timestamp(spec.start_time);
    if (!start) throw std::invalid_argument("invalid start_time '" + spec.start_time + "'");

    SyntheticOutputs paths;
    paths.telemetry = out_dir + "/PdM_telemetry.csv";
    paths.failures = out_dir + "/PdM_failures.csv";
    paths.errors = out_dir + "/PdM_errors.csv";
    paths.maint = out_dir + "/PdM_maint.csv";
    paths.machines = out_dir + "/PdM_machines.csv";

    auto telemetry = open_out(paths.telemetry);
    auto failures = open_out(paths.failures);
    auto errors = open_out(paths.errors);
    auto maint = open_out(paths.maint);
    auto machines = open_out(paths.machines);

    telemetry << "datetime,machineID";
    for (const auto& s : spec.sensors) telemetry << "," << s.name;
    telemetry << "\n";
    failures << "datetime,machineID,failure\n";
    errors << "datetime,machineID,errorID\n";
    maint << "datetime,machineID,comp\n";
    machines << "machineID,model,age\n";

    const std::size_t n_comp = spec.components.size();

    for (std::int64_t m = 1; m <= spec.n_machines; ++m) {
        SplitMix64 rng(hash64("machine_" + std::to_string(m), spec.seed));

        const int model_idx = static_cast<int>(rng.below(4)) + 1;
        const int age = static_cast<int>(rng.below(16)) + 5;
        machines << m << ",model" << model_idx << "," << age << "\n";

        // initial maintenance for every component at simulation start
        std::vector<double> hours_since(n_comp, 0.0);
        std::vector<double> thresholds(n_comp);
        for (std::size_t c = 0; c < n_comp; ++c) {
            const auto& comp = spec.components[c];
            thresholds[c] = comp.threshold_hours +
                            rng.uniform(-comp.threshold_jitter, comp.threshold_jitter);
            maint << format_timestamp(*start) << "," << m << "," << comp.name << "\n";
        }

        for (std::int64_t h = 1; h <= spec.hours; ++h) {
            const Timestamp now = *start + h * kSecondsPerHour;
            for (std::size_t c = 0; c < n_comp; ++c) hours_since[c] += 1.0;

            // sensor readings reflect the wear of the component they indicate
            telemetry << format_timestamp(now) << "," << m;
            for (const auto& sensor : spec.sensors) {
                double wear = 0.0;
                for (std::size_t c = 0; c < n_comp; ++c) {
                    if (spec.components[c].sensor == sensor.name) {
                        wear = std::max(wear, hours_since[c] / thresholds[c]);
                    }
                }
                double value = sensor.healthy_mean + sensor.degrading_shift * wear +
                               rng.normal(0.0, sensor.noise);
                telemetry << "," << num(value);
            }
            telemetry << "\n";

            // error events become likely once any component is well worn
            double worst = 0.0;
            std::size_t worst_c = 0;
            for (std::size_t c = 0; c < n_comp; ++c) {
                double wear = hours_since[c] / thresholds[c];
                if (wear > worst) {
                    worst = wear;
                    worst_c = c;
                }
            }
            if (worst > 0.7 && rng.uniform() < spec.error_rate_degraded) {
                errors << format_timestamp(now) << "," << m << ",error"
                       << (worst_c + 1) << "\n";
            }

            // a component fails when its hours-since-maintenance cross the
            // threshold; the repair resets the clock and re-jitters it
            for (std::size_t c = 0; c < n_comp; ++c) {
                if (hours_since[c] >= thresholds[c]) {
                    const auto& comp = spec.components[c];
                    failures << format_timestamp(now) << "," << m << "," << comp.name << "\n";
                    maint << format_timestamp(now) << "," << m << "," << comp.name << "\n";
                    hours_since[c] = 0.0;
                    thresholds[c] = comp.threshold_hours +
                                    rng.uniform(-comp.threshold_jitter, comp.threshold_jitter);
                }
            }
        }
    }
    return paths;
}

}  // namespace opsqa
