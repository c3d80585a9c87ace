#include "epiforge/enrich.hpp"
#include "epiforge/epiweek.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

namespace epiforge::enrich {

namespace {

using nlohmann::json;

std::string compact_body(std::string_view body) {
    constexpr std::size_t MaxDetail = 300;
    std::string out;
    for (char c : body.substr(0, MaxDetail)) {
        out.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
    }
    if (body.size() > MaxDetail) {
        out += "...";
    }
    return out;
}

std::optional<json> parse_json(const std::string &body) {
    auto doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) {
        return std::nullopt;
    }
    return doc;
}

const json *find_path(const json &doc, std::initializer_list<std::string_view> path) {
    const json *node = &doc;
    for (auto part : path) {
        if (!node->is_object()) {
            return nullptr;
        }
        auto it = node->find(part);
        if (it == node->end()) {
            return nullptr;
        }
        node = &*it;
    }
    return node;
}

std::string status_of(const json &doc) {
    if (auto *s = find_path(doc, {"status"}); s != nullptr && s->is_string()) {
        return s->get<std::string>();
    }
    return {};
}

std::size_t kind_index(ProviderKind kind) { return static_cast<std::size_t>(kind); }

} // namespace

std::string_view to_string(ExclusionReason reason) {
    switch (reason) {
    case ExclusionReason::GeocodeFailure:
        return "GeocodeFailure";
    case ExclusionReason::TimezoneFailure:
        return "TimezoneFailure";
    case ExclusionReason::WeatherUnavailable:
        return "WeatherUnavailable";
    case ExclusionReason::WeatherInvalid:
        return "WeatherInvalid";
    }
    return "Unknown";
}

std::optional<ExclusionReason> parse_exclusion_reason(std::string_view text) {
    for (auto r : {ExclusionReason::GeocodeFailure, ExclusionReason::TimezoneFailure,
                   ExclusionReason::WeatherUnavailable, ExclusionReason::WeatherInvalid}) {
        if (to_string(r) == text) {
            return r;
        }
    }
    return std::nullopt;
}

LookupFailure::LookupFailure(ExclusionReason reason, const std::string &message,
                             std::string raw_body)
    : std::runtime_error(message), reason_(reason), raw_body_(std::move(raw_body)) {}

GeoPoint parse_geocode(const std::string &body, std::string_view country) {
    auto fail = [&](std::string_view why) {
        return LookupFailure(ExclusionReason::GeocodeFailure,
                             fmt::format("geocode '{}': {}", country, why), body);
    };
    auto doc = parse_json(body);
    if (!doc) {
        throw fail(body.empty() ? "no response" : "response is not JSON");
    }
    if (auto status = status_of(*doc); !status.empty() && status != "OK") {
        throw fail(fmt::format("status {}", status));
    }
    auto *results = find_path(*doc, {"results"});
    if (results == nullptr || !results->is_array() || results->empty()) {
        throw fail("no results");
    }
    auto *lat = find_path((*results)[0], {"geometry", "location", "lat"});
    auto *lng = find_path((*results)[0], {"geometry", "location", "lng"});
    if (lat == nullptr || lng == nullptr || !lat->is_number() || !lng->is_number()) {
        throw fail("results[0].geometry.location is incomplete");
    }
    GeoPoint geo{lat->get<double>(), lng->get<double>()};
    if (!std::isfinite(geo.lat) || !std::isfinite(geo.lon) || std::abs(geo.lat) > 90.0 ||
        std::abs(geo.lon) > 180.0) {
        throw fail("coordinates out of range");
    }
    return geo;
}

std::string parse_timezone(const std::string &body) {
    auto fail = [&](std::string_view why) {
        return LookupFailure(ExclusionReason::TimezoneFailure, fmt::format("timezone: {}", why),
                             body);
    };
    auto doc = parse_json(body);
    if (!doc) {
        throw fail(body.empty() ? "no response" : "response is not JSON");
    }
    if (auto status = status_of(*doc); !status.empty() && status != "OK") {
        throw fail(fmt::format("status {}", status));
    }
    auto *id = find_path(*doc, {"timeZoneId"});
    if (id == nullptr || !id->is_string() || id->get<std::string>().empty()) {
        throw fail("no timeZoneId");
    }
    return id->get<std::string>();
}

WeatherObservation parse_weather(const std::string &body) {
    auto unavailable = [&](std::string_view why) {
        return LookupFailure(ExclusionReason::WeatherUnavailable,
                             fmt::format("weather: {}", why), body);
    };
    auto invalid = [&](std::string_view why) {
        return LookupFailure(ExclusionReason::WeatherInvalid, fmt::format("weather: {}", why),
                             body);
    };
    auto doc = parse_json(body);
    if (!doc) {
        throw unavailable(body.empty() ? "no response" : "response is not JSON");
    }
    auto *currently = find_path(*doc, {"currently"});
    if (currently == nullptr || !currently->is_object()) {
        throw unavailable("no 'currently' block");
    }
    auto number = [&](std::string_view field) {
        auto *v = find_path(*currently, {field});
        if (v == nullptr || !v->is_number()) {
            throw unavailable(fmt::format("'currently.{}' missing", field));
        }
        const double x = v->get<double>();
        if (!std::isfinite(x)) {
            throw invalid(fmt::format("'currently.{}' is not finite", field));
        }
        return x;
    };

    WeatherObservation w;
    w.temperature = number("temperature");
    auto *summary = find_path(*currently, {"summary"});
    if (summary == nullptr || !summary->is_string()) {
        throw unavailable("'currently.summary' missing");
    }
    w.summary = summary->get<std::string>();
    w.dew_point = number("dewPoint");
    w.humidity = number("humidity");
    w.pressure = number("pressure");
    w.wind_speed = number("windSpeed");
    if (w.humidity < 0.0 || w.humidity > 1.0) {
        throw invalid(fmt::format("humidity {} outside [0, 1]", w.humidity));
    }
    if (w.pressure <= 0.0) {
        throw invalid(fmt::format("pressure {} is not positive", w.pressure));
    }
    return w;
}

Enricher::Enricher(Provider &provider, CallBudget &budget, ResponseCache &cache)
    : provider_(provider), budget_(budget), cache_(cache) {}

int Enricher::provider_calls(ProviderKind kind) const { return calls_[kind_index(kind)].load(); }

std::string Enricher::lookup(const ProviderRequest &request) {
    if (auto hit = cache_.get(request)) {
        return *hit;
    }
    const auto key = relative_path(request);

    std::promise<std::string> promise;
    std::shared_future<std::string> pending;
    {
        std::lock_guard lock(inflight_mutex_);
        if (auto it = inflight_.find(key); it != inflight_.end()) {
            pending = it->second;
        } else {
            inflight_.emplace(key, promise.get_future().share());
        }
    }
    if (pending.valid()) {
        return pending.get();
    }
    auto finish = [&] {
        std::lock_guard lock(inflight_mutex_);
        inflight_.erase(key);
    };

    try {
        std::string body;
        if (auto hit = cache_.get(request)) {
            body = *hit;
        } else {
            auto call = [&] {
                budget_.consume(request.kind);
                ++calls_[kind_index(request.kind)];
                return provider_.fetch(request).body;
            };
            try {
                body = call();
            } catch (const TransientProviderError &) {
                body = call(); // one retry
            }
            cache_.put(request, body);
        }
        promise.set_value(body);
        finish();
        return body;
    } catch (...) {
        promise.set_exception(std::current_exception());
        finish();
        throw;
    }
}

GeoPoint Enricher::geocode(const std::string &country) {
    if (country.empty()) {
        throw std::invalid_argument("geocode: empty country name");
    }
    ProviderRequest req{ProviderKind::Geocode, country, {}, 0};
    try {
        return parse_geocode(lookup(req), country);
    } catch (const TransientProviderError &e) {
        throw LookupFailure(ExclusionReason::GeocodeFailure, e.what(), {});
    }
}

std::string Enricher::resolve_timezone(const GeoPoint &geo, std::int64_t timestamp) {
    ProviderRequest req{ProviderKind::Timezone, {}, geo, timestamp};
    try {
        return parse_timezone(lookup(req));
    } catch (const TransientProviderError &e) {
        throw LookupFailure(ExclusionReason::TimezoneFailure, e.what(), {});
    }
}

WeatherObservation Enricher::fetch_weather(const GeoPoint &geo, std::int64_t timestamp) {
    if (timestamp <= 0) {
        throw std::invalid_argument("fetch_weather: timestamp must be positive");
    }
    ProviderRequest req{ProviderKind::Weather, {}, geo, timestamp};
    try {
        return parse_weather(lookup(req));
    } catch (const TransientProviderError &e) {
        throw LookupFailure(ExclusionReason::WeatherUnavailable, e.what(), {});
    }
}

std::variant<EnrichedRecord, Exclusion>
Enricher::enrich_record(const ingest::CleanRecord &record) {
    const auto key = ingest::key_of(record);
    try {
        EnrichedRecord out;
        out.base = record;
        out.geo = geocode(record.country);
        const auto week = epiweek::make_epiweek_date(record.year, record.week);
        out.utc_timestamp = week.utc_timestamp;
        out.timezone_id = resolve_timezone(out.geo, week.utc_timestamp);
        try {
            out.timestamp = epiweek::local_midnight_timestamp(week.date, out.timezone_id);
        } catch (const epiweek::ZoneResolutionError &e) {
            throw LookupFailure(ExclusionReason::TimezoneFailure, e.what(), {});
        }
        out.weather = fetch_weather(out.geo, out.timestamp);
        return out;
    } catch (const LookupFailure &f) {
        std::string detail = f.what();
        if (!f.raw_body().empty()) {
            detail += " | response: " + compact_body(f.raw_body());
        }
        return Exclusion{key, f.reason(), std::move(detail)};
    }
}

EnrichOutcome Enricher::enrich_all(const std::vector<ingest::CleanRecord> &records, int width) {
    using Result = std::optional<std::variant<EnrichedRecord, Exclusion>>;
    std::vector<Result> results(records.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::string pause_message;

    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= records.size()) {
                return;
            }
            try {
                results[i] = enrich_record(records[i]);
            } catch (const BudgetExhausted &e) {
                std::lock_guard lock(error_mutex);
                if (pause_message.empty()) {
                    pause_message = e.what();
                }
                stop = true;
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                stop = true;
            }
        }
    };

    const int threads = std::clamp(width, 1, 64);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }

    EnrichOutcome out;
    out.paused = !pause_message.empty();
    out.pause_message = pause_message;
    for (auto &r : results) {
        if (!r) {
            continue;
        }
        if (auto *rec = std::get_if<EnrichedRecord>(&*r)) {
            out.records.push_back(std::move(*rec));
        } else {
            out.exclusions.push_back(std::get<Exclusion>(std::move(*r)));
        }
    }
    std::sort(out.records.begin(), out.records.end(),
              [](const auto &a, const auto &b) { return key_of(a) < key_of(b); });
    std::sort(out.exclusions.begin(), out.exclusions.end(),
              [](const auto &a, const auto &b) { return a.key < b.key; });
    return out;
}

std::vector<std::string> distinct_countries(const std::vector<ingest::CleanRecord> &records) {
    std::set<std::string> names;
    for (const auto &r : records) {
        names.insert(r.country);
    }
    return {names.begin(), names.end()};
}

} // namespace epiforge::enrich
