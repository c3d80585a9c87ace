#pragma once

#include "epiforge/enrich.hpp"
#include "epiforge/ingest.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testing {

namespace fs = std::filesystem;

inline std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path &path, const std::string &content) {
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << content;
}

// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string &tag = "t") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("epiforge_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const fs::path &path() const { return path_; }
    fs::path operator/(const std::string &rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline epiforge::ingest::CleanRecord clean(std::string country, int year, int week,
                                           std::int64_t suspected = 10,
                                           std::int64_t confirmed = 1) {
    epiforge::ingest::CleanRecord r;
    r.country = std::move(country);
    r.year = year;
    r.week = week;
    r.suspected = suspected;
    r.confirmed = confirmed;
    r.source_file = "r.csv";
    r.source_line = 2;
    return r;
}

inline epiforge::enrich::EnrichedRecord enriched(std::string country, int year, int week,
                                                 std::optional<double> incidence,
                                                 std::string summary = "Clear") {
    epiforge::enrich::EnrichedRecord r;
    r.base = clean(std::move(country), year, week, 100 + week, week % 7);
    r.base.incidence_rate = incidence;
    r.base.population_k = 1000 + week;
    r.geo = {10.0 + week * 0.1, -70.0 + year % 10};
    r.timezone_id = "UTC";
    r.utc_timestamp = 1420070400 + week * 604800;
    r.timestamp = r.utc_timestamp;
    r.weather = {70.0 + week * 0.3, std::move(summary), 60.0 + week % 5, 0.5 + week % 4 * 0.1,
                 1010.0 - week % 3, 3.0 + week % 6};
    return r;
}

// Answers every request with a synthetic, valid body and counts calls per
// request path.
class CountingProvider final : public epiforge::enrich::Provider {
public:
    epiforge::enrich::ProviderResponse fetch(const epiforge::enrich::ProviderRequest &req) override {
        using epiforge::enrich::ProviderKind;
        {
            std::lock_guard lock(mutex_);
            ++calls_[epiforge::enrich::relative_path(req)];
        }
        switch (req.kind) {
        case ProviderKind::Geocode: {
            double h = static_cast<double>(std::hash<std::string>{}(req.country) % 1000);
            return {R"({"status":"OK","results":[{"geometry":{"location":{"lat":)" +
                    std::to_string(h / 20.0 - 25.0) + R"(,"lng":)" +
                    std::to_string(-h / 20.0) + "}}}]}"};
        }
        case ProviderKind::Timezone:
            return {R"({"status":"OK","timeZoneId":"UTC"})"};
        case ProviderKind::Weather:
            return {R"({"currently":{"temperature":80.1,"summary":"Clear","dewPoint":70.0,)"
                    R"("humidity":0.7,"pressure":1012.0,"windSpeed":5.5}})"};
        }
        return {};
    }

    int total() const {
        std::lock_guard lock(mutex_);
        int n = 0;
        for (const auto &[k, v] : calls_) {
            n += v;
        }
        return n;
    }
    int max_per_key() const {
        std::lock_guard lock(mutex_);
        int m = 0;
        for (const auto &[k, v] : calls_) {
            m = std::max(m, v);
        }
        return m;
    }
    std::map<std::string, int> calls() const {
        std::lock_guard lock(mutex_);
        return calls_;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, int> calls_;
};

inline std::string random_string(std::mt19937_64 &rng, std::size_t max_len) {
    static const std::string alphabet =
        "abcgGgWEEKweekXyz019 \t\n>*()12^#?$/&,.-'\xc3\xa9";
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string s;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) {
        s.push_back(alphabet[pick(rng)]);
    }
    return s;
}

} // namespace testing
