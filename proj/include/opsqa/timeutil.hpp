#pragma once
// Timestamps are UTC seconds since the epoch, parsed from and rendered to
// the fixed "YYYY-MM-DD HH:MM:SS" form used across all table and fact files.

#include <cstdint>
#include <optional>
#include <string>

namespace opsqa {

using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerHour = 3600;

// Parses "YYYY-MM-DD HH:MM:SS" (a 'T' separator is tolerated).
std::optional<Timestamp> parse_timestamp(const std::string& text);

// "YYYY-MM-DD HH:MM:SS"
std::string format_timestamp(Timestamp ts);

// "YYYY-MM-DDTHH" — the hour-resolution key used in fact identifiers.
std::string format_hour_key(Timestamp ts);

inline double hours_between(Timestamp earlier, Timestamp later) {
    return static_cast<double>(later - earlier) / kSecondsPerHour;
}

}  // namespace opsqa
