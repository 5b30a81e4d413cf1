#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mbda {

/// UTC instant at one-second resolution.
using Instant = std::chrono::sys_seconds;

inline std::int64_t epoch_seconds(Instant t) { return t.time_since_epoch().count(); }
inline Instant from_epoch(std::int64_t s) { return Instant{std::chrono::seconds{s}}; }

/// Start of the epoch-aligned interval of length `interval_seconds` containing t.
Instant floor_to_interval(Instant t, std::int64_t interval_seconds);

/// "2016-08-01T04:10:00Z"
std::string format_iso8601(Instant t);

/// Accepts "YYYY-MM-DDTHH:MM:SS" or "YYYY-MM-DD HH:MM:SS", optionally
/// followed by "Z". Returns nullopt on anything else.
std::optional<Instant> parse_iso8601(std::string_view text);

/// Parses `text` with a strftime-style format (C locale, full consumption
/// required) and interprets the result as UTC shifted by `utc_offset_seconds`.
std::optional<Instant> parse_with_format(const std::string& text, const std::string& format,
                                         std::int64_t utc_offset_seconds = 0);

}  // namespace mbda
