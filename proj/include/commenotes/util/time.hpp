// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Commenotes Authors

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace commenotes {

/// Instants are whole UTC seconds; files carry ISO-8601 strings.
using Instant = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

/// Accepts "YYYY-MM-DDTHH:MM:SS" followed by an optional fraction (truncated)
/// and a zone designator ("Z" or "+HH:MM"/"-HH:MM"). The result is UTC.
std::optional<Instant> parse_iso8601(std::string_view text);

/// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Instant t);

/// Accepts compound forms like "2h", "90m", "1h30m", "45s" or plain seconds.
std::optional<Duration> parse_duration(std::string_view text);

std::string format_duration(Duration d);

inline double to_hours(Duration d) { return static_cast<double>(d.count()) / 3600.0; }

}  // namespace commenotes
