#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tsad {

/// Naive instant with nanosecond resolution. No timezone handling: wall-clock
/// readings are stored as if they were UTC.
using Timestamp = std::chrono::sys_time<std::chrono::nanoseconds>;
using Duration = std::chrono::nanoseconds;

/// Parses `yyyy-mm-dd HH:MM:SS`. Returns nullopt on any deviation from that layout.
[[nodiscard]] std::optional<Timestamp> parse_civil_time(std::string_view text);

/// Formats as `yyyy-mm-dd HH:MM:SS`; sub-second parts are truncated.
[[nodiscard]] std::string format_civil_time(Timestamp t);

/// RFC3339 in UTC with trailing zeros of the fractional part trimmed
/// (`2016-02-15T00:00:00Z`, `2016-02-15T00:00:00.5Z`).
[[nodiscard]] std::string format_rfc3339(Timestamp t);
[[nodiscard]] std::optional<Timestamp> parse_rfc3339(std::string_view text);

[[nodiscard]] inline std::int64_t to_unix_nanos(Timestamp t) { return t.time_since_epoch().count(); }
[[nodiscard]] inline Timestamp from_unix_nanos(std::int64_t ns) { return Timestamp{Duration{ns}}; }

}  // namespace tsad
