#pragma once

#include "epiforge/ingest.hpp"
#include "epiforge/providers.hpp"

#include <array>
#include <atomic>
#include <optional>
#include <cstdint>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

namespace epiforge::enrich {

/// Provider default units: degrees Fahrenheit, hPa, miles/hour, humidity as
/// a fraction.
struct WeatherObservation {
    double temperature = 0.0;
    std::string summary;
    double dew_point = 0.0;
    double humidity = 0.0;
    double pressure = 0.0;
    double wind_speed = 0.0;
    friend bool operator==(const WeatherObservation &, const WeatherObservation &) = default;
};

struct EnrichedRecord {
    ingest::CleanRecord base;
    GeoPoint geo;
    std::string timezone_id;
    std::int64_t utc_timestamp = 0; ///< UTC midnight of the epi-week Monday
    std::int64_t timestamp = 0;     ///< local midnight of the epi-week Monday
    WeatherObservation weather;
    friend bool operator==(const EnrichedRecord &, const EnrichedRecord &) = default;
};

inline ingest::RecordKey key_of(const EnrichedRecord &r) { return ingest::key_of(r.base); }

enum class ExclusionReason {
    GeocodeFailure,
    TimezoneFailure,
    WeatherUnavailable,
    WeatherInvalid,
};

std::string_view to_string(ExclusionReason reason);
std::optional<ExclusionReason> parse_exclusion_reason(std::string_view text);

/// A clean record left out of the enriched dataset, with the provider's raw
/// response kept in `detail`.
struct Exclusion {
    ingest::RecordKey key;
    ExclusionReason reason{};
    std::string detail;
    friend bool operator==(const Exclusion &, const Exclusion &) = default;
};

/// A lookup that produced a definitive but unusable answer.
class LookupFailure : public std::runtime_error {
public:
    LookupFailure(ExclusionReason reason, const std::string &message, std::string raw_body);
    ExclusionReason reason() const { return reason_; }
    const std::string &raw_body() const { return raw_body_; }

private:
    ExclusionReason reason_;
    std::string raw_body_;
};

/// Response parsers; each throws LookupFailure on a body it cannot use.
GeoPoint parse_geocode(const std::string &body, std::string_view country);
std::string parse_timezone(const std::string &body);
WeatherObservation parse_weather(const std::string &body);

struct EnrichOutcome {
    std::vector<EnrichedRecord> records;   ///< sorted by key
    std::vector<Exclusion> exclusions;     ///< sorted by key
    bool paused = false;                   ///< stopped on BudgetExhausted
    std::string pause_message;
};

/// Composes geocode, timezone, local midnight and weather lookups over a
/// provider, with response caching and call budgeting. Distinct keys may be
/// looked up concurrently; a key is never requested twice.
class Enricher {
public:
    Enricher(Provider &provider, CallBudget &budget, ResponseCache &cache);

    GeoPoint geocode(const std::string &country);
    std::string resolve_timezone(const GeoPoint &geo, std::int64_t timestamp);
    WeatherObservation fetch_weather(const GeoPoint &geo, std::int64_t timestamp);

    /// Throws BudgetExhausted; every other failure becomes an Exclusion.
    std::variant<EnrichedRecord, Exclusion> enrich_record(const ingest::CleanRecord &record);

    /// Enriches all records with up to `width` worker threads. Stops early,
    /// keeping finished results, when a budget runs out.
    EnrichOutcome enrich_all(const std::vector<ingest::CleanRecord> &records, int width = 1);

    /// Calls that reached the provider (cache misses), per provider.
    int provider_calls(ProviderKind kind) const;

private:
    std::string lookup(const ProviderRequest &request);

    Provider &provider_;
    CallBudget &budget_;
    ResponseCache &cache_;
    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<std::string>> inflight_;
    std::array<std::atomic<int>, 3> calls_{};
};

std::vector<std::string> distinct_countries(const std::vector<ingest::CleanRecord> &records);

} // namespace epiforge::enrich
