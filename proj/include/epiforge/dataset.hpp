#pragma once

#include "epiforge/enrich.hpp"
#include "epiforge/ingest.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace epiforge::store {

constexpr int SchemaVersion = 1;

/// field name -> unit label
using Units = std::map<std::string, std::string>;

Units clean_units();
Units enriched_units();

/// A line-delimited JSON dataset (`.ejsonl`): one header line with
/// schema_version and units, then one record per line sorted by
/// (country, year, week), then one line per exclusion.
template <class Record>
struct Dataset {
    int schema_version = SchemaVersion;
    Units units;
    std::vector<Record> records;
    std::vector<enrich::Exclusion> exclusions;

    friend bool operator==(const Dataset &, const Dataset &) = default;
};

using CleanDataset = Dataset<ingest::CleanRecord>;
using EnrichedDataset = Dataset<enrich::EnrichedRecord>;

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws DatasetError when records are unsorted, keys repeat (across records
/// and exclusions) or a record breaks a field invariant.
template <class Record>
void validate(const Dataset<Record> &dataset);

template <class Record>
std::string serialize(const Dataset<Record> &dataset);

/// Validates, then writes atomically.
template <class Record>
void save(const Dataset<Record> &dataset, const std::filesystem::path &path);

CleanDataset parse_clean(const std::string &content, const std::string &origin = "<memory>");
EnrichedDataset parse_enriched(const std::string &content,
                               const std::string &origin = "<memory>");

CleanDataset load_clean(const std::filesystem::path &path);
EnrichedDataset load_enriched(const std::filesystem::path &path);

/// Union by key; on conflict the delta's record or exclusion wins.
template <class Record>
Dataset<Record> merge(const Dataset<Record> &base, const Dataset<Record> &delta);

} // namespace epiforge::store
