// epiforge: surveillance report ingestion, enrichment, incidence-rate model
// and figure data.
#include "epiforge/http_provider.hpp"
#include "epiforge/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace epiforge;

int main(int argc, char **argv) {
    CLI::App app{"Chikungunya surveillance pipeline: ingest, enrich, train, evaluate, report"};
    app.require_subcommand(1);
    app.fallthrough();

    pipeline::PipelineConfig config;
    std::string cache_dir;
    std::string year_range;

    app.add_option("--input", config.input_dir, "Directory of report CSV files")
        ->capture_default_str();
    app.add_option("--out", config.output_dir, "Output directory for every stage artifact")
        ->capture_default_str();
    app.add_flag("--offline", config.offline, "Serve provider responses from --fixtures only");
    app.add_option("--fixtures", config.fixtures_dir, "Fixture directory for --offline")
        ->capture_default_str();
    app.add_option("--cache", cache_dir,
                   "Provider response cache (default: $EPIFORGE_CACHE_DIR, else <out>/cache)");
    app.add_option("--year", config.year, "Calendar year for report files without a Year column");
    app.add_option("--year-range", year_range, "Accepted report years, e.g. 2013-2017");
    app.add_option("--test-fraction", config.test_fraction, "Held-out fraction")
        ->capture_default_str();
    app.add_option("--seed", config.seed, "Split seed")->capture_default_str();
    app.add_option("--lambda", config.ridge_lambda, "Ridge penalty")->capture_default_str();
    app.add_option("--budget-weather", config.budget_weather, "Daily weather call limit")
        ->capture_default_str();
    app.add_option("--budget-geocode", config.budget_geocode, "Daily geocode call limit")
        ->capture_default_str();
    app.add_option("--budget-timezone", config.budget_timezone, "Daily timezone call limit")
        ->capture_default_str();
    app.add_option("--jobs", config.jobs, "Parallel enrichment workers")->capture_default_str();
    app.add_flag("--score-all", config.score_all,
                 "Compare scored labels for every record instead of the test split");
    app.add_flag("--charts", config.charts, "Also write SVG bar charts of the aggregates");
    app.add_option("--geocode-url", config.geocode_base, "Geocode API base URL")
        ->capture_default_str();
    app.add_option("--timezone-url", config.timezone_base, "Timezone API base URL")
        ->capture_default_str();
    app.add_option("--weather-url", config.weather_base, "Weather API base URL")
        ->capture_default_str();

    auto *ingest = app.add_subcommand("ingest", "Reports -> clean.ejsonl, rejects.csv");
    auto *enrich = app.add_subcommand("enrich", "clean.ejsonl -> enriched.ejsonl, excluded.csv");
    auto *train = app.add_subcommand("train", "enriched.ejsonl -> model.json");
    auto *evaluate = app.add_subcommand("evaluate", "model.json -> metrics.json");
    auto *report = app.add_subcommand("report", "Aggregates and actual-vs-scored tables");
    auto *all = app.add_subcommand("run-all", "Every stage in order");
    for (auto *sub : {ingest, enrich, train, evaluate, report, all}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pipeline::Fatal;
    }

    if (!cache_dir.empty()) {
        config.cache_dir = cache_dir;
    }
    if (!year_range.empty()) {
        int lo = 0;
        int hi = 0;
        char dash = 0;
        std::istringstream in(year_range);
        if (!(in >> lo >> dash >> hi) || dash != '-') {
            std::cerr << "--year-range must look like 2013-2017\n";
            return pipeline::Fatal;
        }
        config.min_year = lo;
        config.max_year = hi;
    }

    pipeline::Services services;
    services.live_provider = [](const pipeline::PipelineConfig &c, const pipeline::ApiKeys &keys) {
        return std::make_unique<enrich::HttpProvider>(enrich::HttpEndpoints{
            c.geocode_base, c.timezone_base, c.weather_base, keys.geocode, keys.timezone,
            keys.weather});
    };

    if (ingest->parsed()) {
        return pipeline::cmd_ingest(config, std::cerr);
    }
    if (enrich->parsed()) {
        return pipeline::cmd_enrich(config, std::cerr, services);
    }
    if (train->parsed()) {
        return pipeline::cmd_train(config, std::cerr);
    }
    if (evaluate->parsed()) {
        return pipeline::cmd_evaluate(config, std::cerr);
    }
    if (report->parsed()) {
        return pipeline::cmd_report(config, std::cerr);
    }
    return pipeline::run_all(config, std::cerr, services);
}
