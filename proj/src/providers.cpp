#include "epiforge/providers.hpp"
#include "epiforge/io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <limits>

namespace epiforge::enrich {

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
    case ProviderKind::Geocode:
        return "geocode";
    case ProviderKind::Timezone:
        return "timezone";
    case ProviderKind::Weather:
        return "weather";
    }
    return "unknown";
}

std::string format_coord(double value) {
    std::string s = fmt::format("{:.4f}", value);
    if (s == "-0.0000") {
        s = "0.0000";
    }
    return s;
}

std::string slug(std::string_view name) {
    std::string out;
    bool pending_dash = false;
    for (unsigned char c : name) {
        if (c >= 0x80 || std::isalnum(c)) {
            if (pending_dash && !out.empty()) {
                out.push_back('-');
            }
            pending_dash = false;
            out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        } else {
            pending_dash = true;
        }
    }
    return out.empty() ? "_" : out;
}

std::string relative_path(const ProviderRequest &request) {
    if (request.kind == ProviderKind::Geocode) {
        return fmt::format("geocode/{}.json", slug(request.country));
    }
    return fmt::format("{}/{}_{}_{}.json", to_string(request.kind), format_coord(request.geo.lat),
                       format_coord(request.geo.lon), request.timestamp);
}

FixtureProvider::FixtureProvider(std::filesystem::path root) : root_(std::move(root)) {}

ProviderResponse FixtureProvider::fetch(const ProviderRequest &request) {
    const auto path = root_ / relative_path(request);
    if (!std::filesystem::exists(path)) {
        return {};
    }
    return {read_file(path)};
}

BudgetExhausted::BudgetExhausted(ProviderKind kind, int limit)
    : std::runtime_error(
          fmt::format("{} provider daily budget of {} calls exhausted", to_string(kind), limit)),
      kind_(kind) {}

epiweek::Date CallBudget::system_today() {
    return std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
}

CallBudget::CallBudget(std::map<ProviderKind, int> daily_limits, Clock clock,
                       std::optional<std::filesystem::path> ledger)
    : limits_(std::move(daily_limits)), clock_(std::move(clock)), ledger_(std::move(ledger)) {
    day_ = clock_();
    if (ledger_ && std::filesystem::exists(*ledger_)) {
        const auto doc = nlohmann::json::parse(read_file(*ledger_));
        const auto day = epiweek::parse_date(doc.at("day").get<std::string>());
        if (day && *day == day_) {
            for (auto kind : {ProviderKind::Geocode, ProviderKind::Timezone, ProviderKind::Weather}) {
                used_[kind] = doc.at("used").value(std::string(to_string(kind)), 0);
            }
        }
    }
}

void CallBudget::roll_day_locked() {
    const auto today = clock_();
    if (today != day_) {
        day_ = today;
        used_.clear();
    }
}

void CallBudget::consume(ProviderKind kind) {
    std::lock_guard lock(mutex_);
    roll_day_locked();
    auto limit = limits_.find(kind);
    int &used = used_[kind];
    if (limit != limits_.end() && used >= limit->second) {
        throw BudgetExhausted(kind, limit->second);
    }
    ++used;
}

int CallBudget::used_today(ProviderKind kind) const {
    std::lock_guard lock(mutex_);
    if (clock_() != day_) {
        return 0;
    }
    auto it = used_.find(kind);
    return it == used_.end() ? 0 : it->second;
}

int CallBudget::daily_limit(ProviderKind kind) const {
    auto it = limits_.find(kind);
    return it == limits_.end() ? std::numeric_limits<int>::max() : it->second;
}

void CallBudget::save() const {
    if (!ledger_) {
        return;
    }
    nlohmann::ordered_json doc;
    {
        std::lock_guard lock(mutex_);
        doc["day"] = epiweek::format_date(day_);
        auto &used = doc["used"] = nlohmann::ordered_json::object();
        for (auto kind : {ProviderKind::Geocode, ProviderKind::Timezone, ProviderKind::Weather}) {
            auto it = used_.find(kind);
            used[std::string(to_string(kind))] = it == used_.end() ? 0 : it->second;
        }
    }
    write_file_atomic(*ledger_, doc.dump(2) + "\n");
}

ResponseCache::ResponseCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {}

std::optional<std::string> ResponseCache::get(const ProviderRequest &request) {
    const auto key = relative_path(request);
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) {
        return it->second;
    }
    if (dir_) {
        const auto path = *dir_ / key;
        if (std::filesystem::exists(path)) {
            auto body = read_file(path);
            memory_.emplace(key, body);
            return body;
        }
    }
    return std::nullopt;
}

void ResponseCache::put(const ProviderRequest &request, const std::string &body) {
    const auto key = relative_path(request);
    std::lock_guard lock(mutex_);
    memory_[key] = body;
    if (dir_) {
        write_file_atomic(*dir_ / key, body);
    }
}

} // namespace epiforge::enrich
