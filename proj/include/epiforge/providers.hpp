#pragma once

#include "epiforge/epiweek.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epiforge::enrich {

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    friend bool operator==(const GeoPoint &, const GeoPoint &) = default;
};

enum class ProviderKind { Geocode, Timezone, Weather };

std::string_view to_string(ProviderKind kind);

/// One lookup against a provider. Geocode requests use `country`; timezone
/// and weather requests use `geo` and `timestamp`.
struct ProviderRequest {
    ProviderKind kind = ProviderKind::Geocode;
    std::string country;
    GeoPoint geo;
    std::int64_t timestamp = 0;
};

/// Coordinate formatted with four decimals, the precision used in every
/// cache key, fixture name and request URL. Negative zero prints as zero.
std::string format_coord(double value);

/// Lower-case ASCII, runs of other ASCII characters collapsed to '-'.
std::string slug(std::string_view name);

/// "geocode/cuba.json", "weather/21.5218_-77.7812_1431302400.json", ...
std::string relative_path(const ProviderRequest &request);

/// Raw response body. Interpretation is left to the parsers in enrich.hpp so
/// a cached body replays exactly like the original response.
struct ProviderResponse {
    std::string body;
};

/// Network-level failure (connection refused, 5xx). Never cached.
class TransientProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderResponse fetch(const ProviderRequest &request) = 0;
};

/// Serves recorded provider responses from `<root>/<relative_path>`. A
/// missing fixture yields an empty body, which every parser rejects. Has no
/// network capability.
class FixtureProvider final : public Provider {
public:
    explicit FixtureProvider(std::filesystem::path root);
    ProviderResponse fetch(const ProviderRequest &request) override;

private:
    std::filesystem::path root_;
};

class BudgetExhausted : public std::runtime_error {
public:
    BudgetExhausted(ProviderKind kind, int limit);
    ProviderKind kind() const { return kind_; }

private:
    ProviderKind kind_;
};

/// Per-provider daily call limits. Usage is optionally persisted to a small
/// JSON ledger so separate runs on the same day share one allowance.
class CallBudget {
public:
    using Clock = std::function<epiweek::Date()>;

    CallBudget(std::map<ProviderKind, int> daily_limits, Clock clock = system_today,
               std::optional<std::filesystem::path> ledger = std::nullopt);

    /// Atomically checks and records one call; throws BudgetExhausted when
    /// the provider's limit for today has been reached.
    void consume(ProviderKind kind);

    int used_today(ProviderKind kind) const;
    int daily_limit(ProviderKind kind) const;

    /// Writes the ledger file, if any.
    void save() const;

    static epiweek::Date system_today();

private:
    void roll_day_locked();

    std::map<ProviderKind, int> limits_;
    Clock clock_;
    std::optional<std::filesystem::path> ledger_;
    mutable std::mutex mutex_;
    epiweek::Date day_{};
    std::map<ProviderKind, int> used_;
};

/// Response bodies keyed like the fixture layout, in memory and optionally
/// mirrored to a directory.
class ResponseCache {
public:
    explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

    std::optional<std::string> get(const ProviderRequest &request);
    void put(const ProviderRequest &request, const std::string &body);

private:
    std::optional<std::filesystem::path> dir_;
    std::mutex mutex_;
    std::map<std::string, std::string> memory_;
};

} // namespace epiforge::enrich
