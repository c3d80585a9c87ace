#pragma once

#include "epiforge/providers.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

namespace epiforge::pipeline {

enum ExitCode : int {
    Success = 0,
    Fatal = 1,       ///< configuration or I/O error
    EmptyResult = 2,
    BudgetPause = 3, ///< enrichment paused on a provider budget; rerun to resume
};

struct PipelineConfig {
    std::filesystem::path input_dir = "reports";
    std::filesystem::path output_dir = "out";
    std::optional<std::filesystem::path> cache_dir; ///< default: $EPIFORGE_CACHE_DIR, else <out>/cache
    std::filesystem::path fixtures_dir = "fixtures";
    bool offline = false;
    std::optional<int> year; ///< else a Year column, else a year in the file name
    int min_year = 2013;
    int max_year = 2017;
    double test_fraction = 0.25;
    std::uint64_t seed = 1;
    double ridge_lambda = 0.001;
    int budget_geocode = 2500;
    int budget_timezone = 2500;
    int budget_weather = 1000;
    int jobs = 1;
    bool score_all = false;
    bool charts = false;

    std::string geocode_base = "https://maps.googleapis.com/maps/api";
    std::string timezone_base = "https://maps.googleapis.com/maps/api";
    std::string weather_base = "https://api.darksky.net";

    /// Absolute paths, cache directory filled in. Throws std::invalid_argument
    /// for inconsistent settings.
    PipelineConfig resolved() const;
};

struct ApiKeys {
    std::string geocode;
    std::string timezone;
    std::string weather;
};

/// Hooks that let callers replace the provider and the clock.
struct Services {
    /// Builds the live provider; used only when offline is false and no
    /// override is set.
    std::function<std::unique_ptr<enrich::Provider>(const PipelineConfig &, const ApiKeys &)>
        live_provider;
    /// Used instead of fixtures or the live provider when set.
    enrich::Provider *provider_override = nullptr;
    enrich::CallBudget::Clock clock = enrich::CallBudget::system_today;
};

/// Reports -> clean.ejsonl + rejects.csv.
int cmd_ingest(const PipelineConfig &config, std::ostream &log);

/// clean.ejsonl -> enriched.ejsonl + excluded.csv, merged with any earlier
/// partial run.
int cmd_enrich(const PipelineConfig &config, std::ostream &log, const Services &services = {});

/// enriched.ejsonl -> model.json.
int cmd_train(const PipelineConfig &config, std::ostream &log);

/// model.json + enriched.ejsonl -> metrics.json (train and test labelled).
int cmd_evaluate(const PipelineConfig &config, std::ostream &log);

/// model.json + enriched.ejsonl -> agg_year.csv, agg_summary.csv, compare_<year>.csv.
int cmd_report(const PipelineConfig &config, std::ostream &log);

int run_all(const PipelineConfig &config, std::ostream &log, const Services &services = {});

} // namespace epiforge::pipeline
