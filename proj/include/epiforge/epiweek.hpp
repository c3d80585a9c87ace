#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epiforge::epiweek {

using Date = std::chrono::sys_days;

class WeekOutOfRange : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class ZoneResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// ISO-8601 week-numbering year and week of a calendar date.
struct IsoWeek {
    int year = 0;
    int week = 0;
    friend bool operator==(const IsoWeek &, const IsoWeek &) = default;
};

/// 53 when the year starts on a Thursday, or is a leap year starting on a
/// Wednesday; 52 otherwise.
int iso_weeks_in_year(int year);

/// Monday of ISO week `week` of ISO year `year` (week 1 contains January 4).
/// Throws WeekOutOfRange when week is outside [1, iso_weeks_in_year(year)].
Date epiweek_to_date(int year, int week);

IsoWeek iso_week_of(Date date);

/// Seconds since the epoch at 00:00:00 UTC on `date`.
std::int64_t utc_midnight(Date date);

/// Seconds since the epoch at local 00:00:00 on `date` in `zone`.
///
/// `zone` is an IANA identifier resolved against the platform zone database
/// ($TZDIR, default /usr/share/zoneinfo) or a fixed offset such as "UTC",
/// "UTC-05:00" or "+0530". When local midnight falls in a DST gap or is
/// repeated, the earliest valid instant on that date is returned.
/// Throws ZoneResolutionError for an unknown zone.
std::int64_t local_midnight_timestamp(Date date, std::string_view zone);

struct EpiWeekDate {
    int year = 0;
    int week = 0;
    Date date{};                  ///< always a Monday
    std::int64_t utc_timestamp = 0;
    std::optional<std::int64_t> local_timestamp;
};

EpiWeekDate make_epiweek_date(int year, int week);

/// "YYYY-MM-DD".
std::string format_date(Date date);
std::optional<Date> parse_date(std::string_view text);

} // namespace epiforge::epiweek
