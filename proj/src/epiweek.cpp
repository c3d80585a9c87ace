#include "epiforge/epiweek.hpp"
#include "epiforge/timezone.hpp"

#include <fmt/format.h>

#include <charconv>

namespace epiforge::epiweek {

using namespace std::chrono;

namespace {

Date week_one_monday(int iso_year) {
    const Date jan4 = year{iso_year} / January / 4;
    const auto offset = (weekday{jan4} - Monday).count();
    return jan4 - days{offset};
}

} // namespace

int iso_weeks_in_year(int y) {
    const weekday jan1{Date{year{y} / January / 1}};
    if (jan1 == Thursday) {
        return 53;
    }
    if (jan1 == Wednesday && year{y}.is_leap()) {
        return 53;
    }
    return 52;
}

Date epiweek_to_date(int y, int week) {
    const int limit = iso_weeks_in_year(y);
    if (week < 1 || week > limit) {
        throw WeekOutOfRange(
            fmt::format("week {} outside [1, {}] for ISO year {}", week, limit, y));
    }
    return week_one_monday(y) + days{7 * (week - 1)};
}

IsoWeek iso_week_of(Date date) {
    // The ISO year is the calendar year of the Thursday in the same week.
    const auto from_monday = (weekday{date} - Monday).count();
    const Date thursday = date - days{from_monday} + days{3};
    const int iso_year = static_cast<int>(year_month_day{thursday}.year());
    const auto delta = (date - week_one_monday(iso_year)).count();
    return {iso_year, static_cast<int>(delta / 7) + 1};
}

std::int64_t utc_midnight(Date date) {
    return duration_cast<seconds>(date.time_since_epoch()).count();
}

std::int64_t local_midnight_timestamp(Date date, std::string_view zone) {
    return TimeZone::locate(zone)->local_midnight(date);
}

EpiWeekDate make_epiweek_date(int y, int week) {
    EpiWeekDate out;
    out.year = y;
    out.week = week;
    out.date = epiweek_to_date(y, week);
    out.utc_timestamp = utc_midnight(out.date);
    return out;
}

std::string format_date(Date date) {
    const year_month_day ymd{date};
    return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto &value) {
        const char *first = text.data() + pos;
        auto [ptr, ec] = std::from_chars(first, first + len, value);
        return ec == std::errc{} && ptr == first + len;
    };
    if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{ymd};
}

} // namespace epiforge::epiweek
