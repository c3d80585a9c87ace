#pragma once

#include "epiforge/epiweek.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace epiforge::epiweek {

/// UTC offset rules for one zone, either a fixed offset or the transition
/// table of a compiled TZif file.
class TimeZone {
public:
    /// Resolves and caches a zone by identifier. Thread-safe.
    static std::shared_ptr<const TimeZone> locate(std::string_view name);

    static TimeZone fixed(std::string name, int offset_seconds);

    /// Parses the binary TZif format (versions 1 through 4). Times after the
    /// last explicit transition keep the last offset.
    static TimeZone from_tzif(std::string name, std::string_view bytes);

    const std::string &name() const { return name_; }

    /// UTC offset in seconds in effect at `utc_seconds`.
    int offset_at(std::int64_t utc_seconds) const;

    /// Earliest instant whose local date is `date` and local time is at or
    /// after midnight.
    std::int64_t local_midnight(Date date) const;

private:
    struct Transition {
        std::int64_t at;
        int offset_after;
    };

    std::string name_;
    int initial_offset_ = 0;
    std::vector<Transition> transitions_;
};

/// Parses "UTC", "Z", "UTC+05:30", "GMT-3", "-0500" and similar into seconds
/// east of UTC. Returns nullopt when `text` is not a fixed-offset spelling.
std::optional<int> parse_fixed_offset(std::string_view text);

} // namespace epiforge::epiweek
