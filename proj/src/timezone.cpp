#include "epiforge/timezone.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace epiforge::epiweek {

namespace {

constexpr std::int64_t SecondsPerDay = 86400;

std::int64_t read_be(std::string_view bytes, std::size_t pos, std::size_t width) {
    if (pos + width > bytes.size()) {
        throw ZoneResolutionError("truncated TZif data");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
        v = (v << 8) | static_cast<unsigned char>(bytes[pos + i]);
    }
    if (width == 4) {
        return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
    }
    return static_cast<std::int64_t>(v);
}

struct TzifCounts {
    std::int64_t isutcnt, isstdcnt, leapcnt, timecnt, typecnt, charcnt;
};

TzifCounts read_counts(std::string_view bytes, std::size_t pos) {
    if (bytes.substr(pos, 4) != "TZif") {
        throw ZoneResolutionError("missing TZif magic");
    }
    const std::size_t c = pos + 20;
    return {read_be(bytes, c, 4),      read_be(bytes, c + 4, 4),  read_be(bytes, c + 8, 4),
            read_be(bytes, c + 12, 4), read_be(bytes, c + 16, 4), read_be(bytes, c + 20, 4)};
}

std::size_t block_size(const TzifCounts &n, std::size_t time_width) {
    return static_cast<std::size_t>(n.timecnt * time_width + n.timecnt + n.typecnt * 6 +
                                    n.charcnt + n.leapcnt * (time_width + 4) + n.isstdcnt +
                                    n.isutcnt);
}

bool is_safe_zone_name(std::string_view name) {
    if (name.empty() || name.front() == '/' || name.find("..") != std::string_view::npos) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '/' || c == '_' || c == '-' || c == '+';
    });
}

std::filesystem::path zoneinfo_root() {
    if (const char *dir = std::getenv("TZDIR"); dir != nullptr && *dir != '\0') {
        return dir;
    }
    return "/usr/share/zoneinfo";
}

} // namespace

std::optional<int> parse_fixed_offset(std::string_view text) {
    std::string s(text);
    // U+2212 MINUS SIGN is common in copied offsets.
    if (auto p = s.find("\xE2\x88\x92"); p != std::string::npos) {
        s.replace(p, 3, "-");
    }
    std::string_view v = s;
    for (std::string_view prefix : {"UTC", "GMT", "Z"}) {
        if (v.substr(0, prefix.size()) == prefix) {
            v.remove_prefix(prefix.size());
            if (v.empty()) {
                return 0;
            }
            break;
        }
    }
    if (v.empty() || (v.front() != '+' && v.front() != '-')) {
        return std::nullopt;
    }
    const int sign = v.front() == '-' ? -1 : 1;
    v.remove_prefix(1);

    std::string digits;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == ':' && i == 2 && v.size() == 5) {
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(v[i]))) {
            return std::nullopt;
        }
        digits.push_back(v[i]);
    }
    int hours = 0;
    int minutes = 0;
    if (digits.size() == 1 || digits.size() == 2) {
        hours = std::stoi(digits);
    } else if (digits.size() == 4) {
        hours = std::stoi(digits.substr(0, 2));
        minutes = std::stoi(digits.substr(2));
    } else {
        return std::nullopt;
    }
    if (hours > 18 || minutes > 59) {
        return std::nullopt;
    }
    return sign * (hours * 3600 + minutes * 60);
}

TimeZone TimeZone::fixed(std::string name, int offset_seconds) {
    TimeZone tz;
    tz.name_ = std::move(name);
    tz.initial_offset_ = offset_seconds;
    return tz;
}

TimeZone TimeZone::from_tzif(std::string name, std::string_view bytes) {
    TzifCounts n = read_counts(bytes, 0);
    const char version = bytes.size() > 4 ? bytes[4] : '\0';
    std::size_t pos = 44;
    std::size_t time_width = 4;
    if (version >= '2') {
        pos += block_size(n, 4);
        n = read_counts(bytes, pos);
        pos += 44;
        time_width = 8;
    }
    if (n.typecnt < 1) {
        throw ZoneResolutionError(fmt::format("zone '{}' has no local time types", name));
    }

    const std::size_t times_pos = pos;
    const std::size_t index_pos = times_pos + n.timecnt * time_width;
    const std::size_t types_pos = index_pos + n.timecnt;

    std::vector<int> type_offsets;
    for (std::int64_t i = 0; i < n.typecnt; ++i) {
        type_offsets.push_back(static_cast<int>(read_be(bytes, types_pos + i * 6, 4)));
    }

    TimeZone tz;
    tz.name_ = std::move(name);
    tz.initial_offset_ = type_offsets[0];
    for (std::int64_t i = 0; i < n.timecnt; ++i) {
        const std::int64_t at = read_be(bytes, times_pos + i * time_width, time_width);
        const auto type = static_cast<unsigned char>(bytes.at(index_pos + i));
        if (type >= type_offsets.size()) {
            throw ZoneResolutionError(fmt::format("zone '{}' has a bad type index", tz.name_));
        }
        tz.transitions_.push_back({at, type_offsets[type]});
    }
    return tz;
}

std::shared_ptr<const TimeZone> TimeZone::locate(std::string_view name) {
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const TimeZone>, std::less<>> cache;

    std::lock_guard lock(mutex);
    if (auto it = cache.find(name); it != cache.end()) {
        return it->second;
    }

    std::shared_ptr<const TimeZone> zone;
    if (auto offset = parse_fixed_offset(name)) {
        zone = std::make_shared<const TimeZone>(fixed(std::string(name), *offset));
    } else {
        if (!is_safe_zone_name(name)) {
            throw ZoneResolutionError(fmt::format("unknown time zone '{}'", name));
        }
        const auto path = zoneinfo_root() / std::string(name);
        std::ifstream in(path, std::ios::binary);
        if (!in || std::filesystem::is_directory(path)) {
            throw ZoneResolutionError(fmt::format("unknown time zone '{}'", name));
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        zone = std::make_shared<const TimeZone>(from_tzif(std::string(name), buffer.str()));
    }
    cache.emplace(std::string(name), zone);
    return zone;
}

int TimeZone::offset_at(std::int64_t utc_seconds) const {
    auto it = std::upper_bound(transitions_.begin(), transitions_.end(), utc_seconds,
                               [](std::int64_t t, const Transition &tr) { return t < tr.at; });
    if (it == transitions_.begin()) {
        return initial_offset_;
    }
    return std::prev(it)->offset_after;
}

std::int64_t TimeZone::local_midnight(Date date) const {
    const std::int64_t wall = utc_midnight(date);
    const std::int64_t lo = wall - 2 * SecondsPerDay;
    const std::int64_t hi = wall + 2 * SecondsPerDay;

    std::set<int> candidates{offset_at(wall)};
    for (const auto &tr : transitions_) {
        if (tr.at >= lo && tr.at <= hi) {
            candidates.insert(offset_at(tr.at - 1));
            candidates.insert(tr.offset_after);
        }
    }

    std::optional<std::int64_t> best;
    for (int offset : candidates) {
        const std::int64_t t = wall - offset;
        if (offset_at(t) == offset && (!best || t < *best)) {
            best = t;
        }
    }
    if (best) {
        return *best;
    }

    // Midnight was skipped: the first instant of the date is the transition
    // that jumps the wall clock past it.
    for (const auto &tr : transitions_) {
        if (tr.at < lo || tr.at > hi) {
            continue;
        }
        const std::int64_t before = tr.at + offset_at(tr.at - 1);
        const std::int64_t after = tr.at + tr.offset_after;
        if (before <= wall && wall < after) {
            return tr.at;
        }
    }
    throw ZoneResolutionError(
        fmt::format("cannot resolve local midnight of {} in '{}'", format_date(date), name_));
}

} // namespace epiforge::epiweek
