#include "epiforge/dataset.hpp"
#include "epiforge/epiweek.hpp"
#include "epiforge/io.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace epiforge::store {

namespace {

using nlohmann::ordered_json;
using ingest::CleanRecord;
using enrich::EnrichedRecord;
using enrich::Exclusion;

template <class T>
ordered_json optional_value(const std::optional<T> &v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

void write_base(ordered_json &j, const CleanRecord &r) {
    j["country"] = r.country;
    j["year"] = r.year;
    j["week"] = r.week;
    j["suspected"] = r.suspected;
    j["confirmed"] = r.confirmed;
    j["imported"] = optional_value(r.imported);
    j["deaths"] = optional_value(r.deaths);
    j["incidence_rate"] = optional_value(r.incidence_rate);
    j["population_k"] = optional_value(r.population_k);
    j["source_file"] = r.source_file;
    j["source_line"] = r.source_line;
}

ordered_json to_json(const CleanRecord &r) {
    ordered_json j;
    write_base(j, r);
    return j;
}

ordered_json to_json(const EnrichedRecord &r) {
    ordered_json j;
    write_base(j, r.base);
    j["date"] = epiweek::format_date(epiweek::epiweek_to_date(r.base.year, r.base.week));
    j["lat"] = r.geo.lat;
    j["lon"] = r.geo.lon;
    j["timezone_id"] = r.timezone_id;
    j["utc_timestamp"] = r.utc_timestamp;
    j["timestamp"] = r.timestamp;
    j["weather_temperature"] = r.weather.temperature;
    j["weather_summary"] = r.weather.summary;
    j["weather_dewPoint"] = r.weather.dew_point;
    j["weather_humidity"] = r.weather.humidity;
    j["weather_pressure"] = r.weather.pressure;
    j["weather_windSpeed"] = r.weather.wind_speed;
    return j;
}

ordered_json to_json(const Exclusion &e) {
    ordered_json inner;
    inner["country"] = std::get<0>(e.key);
    inner["year"] = std::get<1>(e.key);
    inner["week"] = std::get<2>(e.key);
    inner["reason"] = std::string(enrich::to_string(e.reason));
    inner["detail"] = e.detail;
    ordered_json j;
    j["excluded"] = std::move(inner);
    return j;
}

template <class T>
std::optional<T> read_optional(const ordered_json &j, const char *field) {
    const auto &v = j.at(field);
    if (v.is_null()) {
        return std::nullopt;
    }
    return v.get<T>();
}

CleanRecord base_from_json(const ordered_json &j) {
    CleanRecord r;
    r.country = j.at("country").get<std::string>();
    r.year = j.at("year").get<int>();
    r.week = j.at("week").get<int>();
    r.suspected = j.at("suspected").get<std::int64_t>();
    r.confirmed = j.at("confirmed").get<std::int64_t>();
    r.imported = read_optional<std::int64_t>(j, "imported");
    r.deaths = read_optional<std::int64_t>(j, "deaths");
    r.incidence_rate = read_optional<double>(j, "incidence_rate");
    r.population_k = read_optional<std::int64_t>(j, "population_k");
    r.source_file = j.at("source_file").get<std::string>();
    r.source_line = j.at("source_line").get<int>();
    return r;
}

void from_json_line(const ordered_json &j, CleanRecord &r) { r = base_from_json(j); }

void from_json_line(const ordered_json &j, EnrichedRecord &r) {
    r.base = base_from_json(j);
    r.geo = {j.at("lat").get<double>(), j.at("lon").get<double>()};
    r.timezone_id = j.at("timezone_id").get<std::string>();
    r.utc_timestamp = j.at("utc_timestamp").get<std::int64_t>();
    r.timestamp = j.at("timestamp").get<std::int64_t>();
    r.weather.temperature = j.at("weather_temperature").get<double>();
    r.weather.summary = j.at("weather_summary").get<std::string>();
    r.weather.dew_point = j.at("weather_dewPoint").get<double>();
    r.weather.humidity = j.at("weather_humidity").get<double>();
    r.weather.pressure = j.at("weather_pressure").get<double>();
    r.weather.wind_speed = j.at("weather_windSpeed").get<double>();
}

Exclusion exclusion_from_json(const ordered_json &j) {
    const auto &inner = j.at("excluded");
    auto reason = enrich::parse_exclusion_reason(inner.at("reason").get<std::string>());
    if (!reason) {
        throw DatasetError("unknown exclusion reason");
    }
    return {{inner.at("country").get<std::string>(), inner.at("year").get<int>(),
             inner.at("week").get<int>()},
            *reason,
            inner.at("detail").get<std::string>()};
}

// Empty string when the record is valid.
std::string check_base(const CleanRecord &r) {
    if (r.country.empty()) {
        return "empty country";
    }
    if (r.week < 1 || r.week > epiweek::iso_weeks_in_year(r.year)) {
        return fmt::format("week {} out of range for {}", r.week, r.year);
    }
    if (r.suspected < 0 || r.confirmed < 0 || r.imported.value_or(0) < 0 ||
        r.deaths.value_or(0) < 0) {
        return "negative count";
    }
    if (r.incidence_rate && (!std::isfinite(*r.incidence_rate) || *r.incidence_rate < 0.0)) {
        return "invalid incidence_rate";
    }
    if (r.population_k && *r.population_k <= 0) {
        return "population_k must be positive";
    }
    return {};
}

std::string check(const CleanRecord &r) { return check_base(r); }

std::string check(const EnrichedRecord &r) {
    if (auto problem = check_base(r.base); !problem.empty()) {
        return problem;
    }
    const auto &w = r.weather;
    if (!std::isfinite(r.geo.lat) || !std::isfinite(r.geo.lon) || std::abs(r.geo.lat) > 90.0 ||
        std::abs(r.geo.lon) > 180.0) {
        return "coordinates out of range";
    }
    if (r.timezone_id.empty()) {
        return "empty timezone_id";
    }
    for (double x : {w.temperature, w.dew_point, w.humidity, w.pressure, w.wind_speed}) {
        if (!std::isfinite(x)) {
            return "non-finite weather value";
        }
    }
    if (w.humidity < 0.0 || w.humidity > 1.0) {
        return "humidity outside [0, 1]";
    }
    if (w.pressure <= 0.0) {
        return "pressure must be positive";
    }
    return {};
}

ingest::RecordKey record_key(const CleanRecord &r) { return ingest::key_of(r); }
ingest::RecordKey record_key(const EnrichedRecord &r) { return enrich::key_of(r); }

std::string describe(const ingest::RecordKey &k) {
    return fmt::format("({}, {}, {})", std::get<0>(k), std::get<1>(k), std::get<2>(k));
}

template <class Record>
Dataset<Record> parse_dataset(const std::string &content, const std::string &origin) {
    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    Dataset<Record> out;
    bool have_header = false;
    std::optional<ingest::RecordKey> last_record;
    std::optional<ingest::RecordKey> last_exclusion;
    std::set<ingest::RecordKey> record_keys;

    auto fail = [&](const std::string &why) {
        return DatasetError(fmt::format("{}:{}: {}", origin, line_no, why));
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw fail("malformed JSON line");
        }
        if (!have_header) {
            if (!j.contains("schema_version")) {
                throw fail("missing header line");
            }
            out.schema_version = j.at("schema_version").get<int>();
            if (out.schema_version != SchemaVersion) {
                throw fail(fmt::format("schema_version {} is not supported (reader supports {})",
                                       out.schema_version, SchemaVersion));
            }
            out.units = j.at("units").get<Units>();
            have_header = true;
            continue;
        }
        try {
            if (j.contains("excluded")) {
                auto e = exclusion_from_json(j);
                if (last_exclusion && !(*last_exclusion < e.key)) {
                    throw fail("exclusions out of order or duplicated at " + describe(e.key));
                }
                if (record_keys.count(e.key) != 0) {
                    throw fail("key both enriched and excluded: " + describe(e.key));
                }
                last_exclusion = e.key;
                out.exclusions.push_back(std::move(e));
                continue;
            }
            if (last_exclusion) {
                throw fail("record after exclusion lines");
            }
            Record r;
            from_json_line(j, r);
            if (auto problem = check(r); !problem.empty()) {
                throw fail(problem);
            }
            const auto key = record_key(r);
            if (last_record && !(*last_record < key)) {
                throw fail("records out of order or duplicated at " + describe(key));
            }
            last_record = key;
            record_keys.insert(key);
            out.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception &e) {
            throw fail(e.what());
        }
    }
    if (!have_header) {
        throw fail("missing header line");
    }
    return out;
}

} // namespace

Units clean_units() {
    return {{"incidence_rate", "cases per 100000"}, {"population_k", "persons x 1000"}};
}

Units enriched_units() {
    auto units = clean_units();
    units.insert({{"lat", "degrees"},
                  {"lon", "degrees"},
                  {"timestamp", "unix seconds"},
                  {"weather_temperature", "degF"},
                  {"weather_dewPoint", "degF"},
                  {"weather_humidity", "fraction"},
                  {"weather_pressure", "hPa"},
                  {"weather_windSpeed", "mph"}});
    return units;
}

template <class Record>
void validate(const Dataset<Record> &dataset) {
    if (dataset.schema_version != SchemaVersion) {
        throw DatasetError(fmt::format("schema_version {} is not supported (writer supports {})",
                                       dataset.schema_version, SchemaVersion));
    }
    std::set<ingest::RecordKey> seen;
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        const auto &r = dataset.records[i];
        const auto key = record_key(r);
        if (auto problem = check(r); !problem.empty()) {
            throw DatasetError(fmt::format("record {} {}: {}", i, describe(key), problem));
        }
        if (i > 0 && !(record_key(dataset.records[i - 1]) < key)) {
            throw DatasetError(
                fmt::format("record {} {}: duplicate or unsorted key", i, describe(key)));
        }
        seen.insert(key);
    }
    for (std::size_t i = 0; i < dataset.exclusions.size(); ++i) {
        const auto &key = dataset.exclusions[i].key;
        if (i > 0 && !(dataset.exclusions[i - 1].key < key)) {
            throw DatasetError(
                fmt::format("exclusion {}: duplicate or unsorted key {}", i, describe(key)));
        }
        if (seen.count(key) != 0) {
            throw DatasetError(fmt::format("key {} is both a record and an exclusion", describe(key)));
        }
    }
}

template <class Record>
std::string serialize(const Dataset<Record> &dataset) {
    validate(dataset);
    ordered_json header;
    header["schema_version"] = dataset.schema_version;
    header["units"] = dataset.units;
    std::string out = header.dump() + "\n";
    for (const auto &r : dataset.records) {
        out += to_json(r).dump() + "\n";
    }
    for (const auto &e : dataset.exclusions) {
        out += to_json(e).dump() + "\n";
    }
    return out;
}

template <class Record>
void save(const Dataset<Record> &dataset, const std::filesystem::path &path) {
    write_file_atomic(path, serialize(dataset));
}

CleanDataset parse_clean(const std::string &content, const std::string &origin) {
    return parse_dataset<CleanRecord>(content, origin);
}

EnrichedDataset parse_enriched(const std::string &content, const std::string &origin) {
    return parse_dataset<EnrichedRecord>(content, origin);
}

CleanDataset load_clean(const std::filesystem::path &path) {
    return parse_clean(read_file(path), path.string());
}

EnrichedDataset load_enriched(const std::filesystem::path &path) {
    return parse_enriched(read_file(path), path.string());
}

template <class Record>
Dataset<Record> merge(const Dataset<Record> &base, const Dataset<Record> &delta) {
    if (base.schema_version != delta.schema_version) {
        throw DatasetError(fmt::format("cannot merge schema_version {} with {}",
                                       base.schema_version, delta.schema_version));
    }
    if (base.units != delta.units) {
        throw DatasetError("cannot merge datasets with different unit labels");
    }

    std::map<ingest::RecordKey, const Record *> records;
    std::map<ingest::RecordKey, const Exclusion *> exclusions;
    for (const auto *side : {&base, &delta}) {
        for (const auto &r : side->records) {
            exclusions.erase(record_key(r));
            records[record_key(r)] = &r;
        }
        for (const auto &e : side->exclusions) {
            records.erase(e.key);
            exclusions[e.key] = &e;
        }
    }

    Dataset<Record> out;
    out.schema_version = base.schema_version;
    out.units = base.units;
    for (const auto &[key, r] : records) {
        out.records.push_back(*r);
    }
    for (const auto &[key, e] : exclusions) {
        out.exclusions.push_back(*e);
    }
    return out;
}

template void validate(const CleanDataset &);
template void validate(const EnrichedDataset &);
template std::string serialize(const CleanDataset &);
template std::string serialize(const EnrichedDataset &);
template void save(const CleanDataset &, const std::filesystem::path &);
template void save(const EnrichedDataset &, const std::filesystem::path &);
template CleanDataset merge(const CleanDataset &, const CleanDataset &);
template EnrichedDataset merge(const EnrichedDataset &, const EnrichedDataset &);

} // namespace epiforge::store
