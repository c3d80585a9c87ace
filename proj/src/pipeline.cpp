#include "epiforge/pipeline.hpp"
#include "epiforge/analytics.hpp"
#include "epiforge/csv.hpp"
#include "epiforge/dataset.hpp"
#include "epiforge/enrich.hpp"
#include "epiforge/ingest.hpp"
#include "epiforge/io.hpp"
#include "epiforge/model.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <regex>
#include <cstdlib>
#include <set>

namespace epiforge::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr const char *CleanFile = "clean.ejsonl";
constexpr const char *RejectsFile = "rejects.csv";
constexpr const char *EnrichedFile = "enriched.ejsonl";
constexpr const char *ExcludedFile = "excluded.csv";
constexpr const char *ModelFile = "model.json";
constexpr const char *MetricsFile = "metrics.json";

template <class Fn>
int guarded(std::string_view stage, std::ostream &log, Fn &&fn) {
    try {
        return fn();
    } catch (const std::exception &e) {
        fmt::print(log, "{}: error: {}\n", stage, e.what());
        return Fatal;
    }
}

std::string env_or_empty(const char *name) {
    const char *v = std::getenv(name);
    return v == nullptr ? std::string{} : std::string{v};
}

// A single standalone 4-digit year (1900-2099) in a file name such as
// "paho_chikv_2014.csv".
std::optional<int> year_from_file_name(const std::string &name) {
    static const std::regex pattern("(^|[^0-9])((19|20)[0-9]{2})(?![0-9])");
    std::optional<int> found;
    for (auto it = std::sregex_iterator(name.begin(), name.end(), pattern);
         it != std::sregex_iterator(); ++it) {
        if (found) {
            return std::nullopt;
        }
        found = std::stoi((*it)[2].str());
    }
    return found;
}

std::vector<enrich::EnrichedRecord> with_targets(std::vector<enrich::EnrichedRecord> records) {
    std::erase_if(records, [](const auto &r) { return !r.base.incidence_rate.has_value(); });
    return records;
}

struct SplitSettings {
    double test_fraction;
    std::uint64_t seed;
};

SplitSettings split_of(const nlohmann::json &model_doc) {
    const auto &s = model_doc.at("split");
    return {s.at("test_fraction").get<double>(), s.at("seed").get<std::uint64_t>()};
}

std::vector<double> targets_of(const std::vector<enrich::EnrichedRecord> &records) {
    std::vector<double> y;
    for (const auto &r : records) {
        y.push_back(*r.base.incidence_rate);
    }
    return y;
}

std::vector<double> scores_of(const model::ModelCoefficients &m,
                              const std::vector<enrich::EnrichedRecord> &records) {
    std::vector<double> out;
    for (const auto &r : records) {
        out.push_back(model::predict(m, r));
    }
    return out;
}

std::string excluded_csv(const std::vector<enrich::Exclusion> &exclusions) {
    std::string out = "country,year,week,reason,detail\n";
    for (const auto &e : exclusions) {
        out += csv::join({std::get<0>(e.key), std::to_string(std::get<1>(e.key)),
                          std::to_string(std::get<2>(e.key)), std::string(enrich::to_string(e.reason)),
                          e.detail}) +
               "\n";
    }
    return out;
}

} // namespace

PipelineConfig PipelineConfig::resolved() const {
    PipelineConfig c = *this;
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
        throw std::invalid_argument("--test-fraction must lie in (0, 1)");
    }
    if (!(c.ridge_lambda >= 0.0)) {
        throw std::invalid_argument("--lambda must be non-negative");
    }
    if (c.min_year > c.max_year) {
        throw std::invalid_argument("year range is empty");
    }
    if (c.budget_geocode < 0 || c.budget_timezone < 0 || c.budget_weather < 0) {
        throw std::invalid_argument("budgets must be non-negative");
    }
    c.input_dir = fs::absolute(c.input_dir).lexically_normal();
    c.output_dir = fs::absolute(c.output_dir).lexically_normal();
    c.fixtures_dir = fs::absolute(c.fixtures_dir).lexically_normal();
    if (!c.cache_dir) {
        const auto env = env_or_empty("EPIFORGE_CACHE_DIR");
        c.cache_dir = env.empty() ? c.output_dir / "cache" : fs::path(env);
    }
    c.cache_dir = fs::absolute(*c.cache_dir).lexically_normal();
    return c;
}

int cmd_ingest(const PipelineConfig &raw_config, std::ostream &log) {
    return guarded("ingest", log, [&] {
        const auto config = raw_config.resolved();
        if (!fs::is_directory(config.input_dir)) {
            fmt::print(log, "ingest: input directory '{}' does not exist\n",
                       config.input_dir.string());
            return static_cast<int>(EmptyResult);
        }
        std::vector<fs::path> files;
        for (const auto &entry : fs::directory_iterator(config.input_dir)) {
            auto ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (entry.is_regular_file() && ext == ".csv") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            fmt::print(log, "ingest: no .csv report files in '{}'\n", config.input_dir.string());
            return static_cast<int>(EmptyResult);
        }

        std::vector<ingest::CleanRecord> clean;
        std::vector<ingest::RejectReason> rejects;
        std::size_t failed_files = 0;
        std::size_t raw_rows = 0;
        for (const auto &file : files) {
            const auto name = file.filename().string();
            ingest::ParsedReport parsed;
            try {
                parsed = ingest::parse_report_file(
                    read_file(file), config.year ? config.year : year_from_file_name(name), name);
            } catch (const std::exception &e) {
                fmt::print(log, "ingest: skipping {}: {}\n", name, e.what());
                ++failed_files;
                continue;
            }
            rejects.insert(rejects.end(), parsed.rejects.begin(), parsed.rejects.end());
            raw_rows += parsed.rows.size();
            for (const auto &row : parsed.rows) {
                if (row.year < config.min_year || row.year > config.max_year) {
                    rejects.push_back({row.source_file, row.source_line,
                                       ingest::RejectCode::UnparseableNumber,
                                       fmt::format("year {} outside {}..{}", row.year,
                                                   config.min_year, config.max_year)});
                    continue;
                }
                auto result = ingest::validate_row(row);
                if (auto *rec = std::get_if<ingest::CleanRecord>(&result)) {
                    clean.push_back(std::move(*rec));
                } else {
                    rejects.push_back(std::get<ingest::RejectReason>(std::move(result)));
                }
            }
        }
        if (failed_files == files.size()) {
            fmt::print(log, "ingest: every report file failed\n");
            return static_cast<int>(EmptyResult);
        }

        const std::size_t before_dedupe = clean.size();
        store::CleanDataset dataset;
        dataset.units = store::clean_units();
        dataset.records = ingest::dedupe(std::move(clean));
        store::save(dataset, config.output_dir / CleanFile);

        std::sort(rejects.begin(), rejects.end(), [](const auto &a, const auto &b) {
            return std::tie(a.source_file, a.source_line) < std::tie(b.source_file, b.source_line);
        });
        std::string report = "source_file,source_line,code,detail\n";
        for (const auto &r : rejects) {
            report += csv::join({r.source_file, std::to_string(r.source_line),
                                 std::string(ingest::to_string(r.code)), r.detail}) +
                      "\n";
        }
        write_file_atomic(config.output_dir / RejectsFile, report);

        fmt::print(log,
                   "ingest: {} files, {} rows, {} rejected, {} duplicates dropped, {} clean "
                   "records\n",
                   files.size() - failed_files, raw_rows, rejects.size(),
                   before_dedupe - dataset.records.size(), dataset.records.size());
        return static_cast<int>(dataset.records.empty() ? EmptyResult : Success);
    });
}

int cmd_enrich(const PipelineConfig &raw_config, std::ostream &log, const Services &services) {
    return guarded("enrich", log, [&] {
        const auto config = raw_config.resolved();
        const auto clean = store::load_clean(config.output_dir / CleanFile);

        std::unique_ptr<enrich::Provider> owned;
        enrich::Provider *provider = services.provider_override;
        if (provider == nullptr) {
            if (config.offline) {
                owned = std::make_unique<enrich::FixtureProvider>(config.fixtures_dir);
            } else {
                ApiKeys keys{env_or_empty("GEOCODE_API_KEY"), env_or_empty("TIMEZONE_API_KEY"),
                             env_or_empty("WEATHER_API_KEY")};
                std::vector<std::string> missing;
                if (keys.geocode.empty()) missing.push_back("GEOCODE_API_KEY");
                if (keys.timezone.empty()) missing.push_back("TIMEZONE_API_KEY");
                if (keys.weather.empty()) missing.push_back("WEATHER_API_KEY");
                if (!missing.empty()) {
                    fmt::print(log, "enrich: missing API key(s): {} (use --offline for fixtures)\n",
                               fmt::join(missing, ", "));
                    return static_cast<int>(Fatal);
                }
                if (!services.live_provider) {
                    fmt::print(log, "enrich: no live provider available in this build\n");
                    return static_cast<int>(Fatal);
                }
                owned = services.live_provider(config, keys);
            }
            provider = owned.get();
        }

        enrich::CallBudget budget({{enrich::ProviderKind::Geocode, config.budget_geocode},
                                   {enrich::ProviderKind::Timezone, config.budget_timezone},
                                   {enrich::ProviderKind::Weather, config.budget_weather}},
                                  services.clock, *config.cache_dir / "budget.json");
        enrich::ResponseCache cache(*config.cache_dir);
        enrich::Enricher enricher(*provider, budget, cache);

        auto outcome = enricher.enrich_all(clean.records, config.jobs);
        budget.save();

        store::EnrichedDataset delta;
        delta.units = store::enriched_units();
        delta.records = std::move(outcome.records);
        delta.exclusions = std::move(outcome.exclusions);

        const auto path = config.output_dir / EnrichedFile;
        store::EnrichedDataset merged = delta;
        if (fs::exists(path)) {
            auto previous = store::load_enriched(path);
            std::set<ingest::RecordKey> current;
            for (const auto &r : clean.records) {
                current.insert(ingest::key_of(r));
            }
            std::erase_if(previous.records,
                          [&](const auto &r) { return current.count(enrich::key_of(r)) == 0; });
            std::erase_if(previous.exclusions,
                          [&](const auto &e) { return current.count(e.key) == 0; });
            merged = store::merge(previous, delta);
        }
        store::save(merged, path);
        write_file_atomic(config.output_dir / ExcludedFile, excluded_csv(merged.exclusions));

        fmt::print(log,
                   "enrich: {} clean, {} enriched, {} excluded; provider calls geocode={} "
                   "timezone={} weather={}\n",
                   clean.records.size(), merged.records.size(), merged.exclusions.size(),
                   enricher.provider_calls(enrich::ProviderKind::Geocode),
                   enricher.provider_calls(enrich::ProviderKind::Timezone),
                   enricher.provider_calls(enrich::ProviderKind::Weather));
        if (outcome.paused) {
            fmt::print(log, "enrich: paused: {}; rerun to resume\n", outcome.pause_message);
            return static_cast<int>(BudgetPause);
        }
        return static_cast<int>(merged.records.empty() ? EmptyResult : Success);
    });
}

int cmd_train(const PipelineConfig &raw_config, std::ostream &log) {
    return guarded("train", log, [&] {
        const auto config = raw_config.resolved();
        auto usable = with_targets(store::load_enriched(config.output_dir / EnrichedFile).records);
        if (usable.size() < 2) {
            fmt::print(log, "train: {} usable records; need at least 2\n", usable.size());
            return static_cast<int>(EmptyResult);
        }
        auto [train, test] = model::split(usable, config.test_fraction, config.seed);
        auto x = model::encode(train);
        auto m = model::fit(x, config.ridge_lambda);
        for (const auto &w : x.warnings) {
            fmt::print(log, "train: warning: {}\n", w);
        }
        for (const auto &w : m.warnings) {
            fmt::print(log, "train: warning: {}\n", w);
        }

        auto doc = model::to_json(m);
        doc["split"] = {{"seed", config.seed},
                        {"test_fraction", config.test_fraction},
                        {"train_size", train.size()},
                        {"test_size", test.size()}};
        write_file_atomic(config.output_dir / ModelFile, doc.dump(2) + "\n");
        fmt::print(log, "train: fitted {} weights on {} records (lambda {})\n", m.weights.size(),
                   train.size(), m.ridge_lambda);
        return static_cast<int>(Success);
    });
}

int cmd_evaluate(const PipelineConfig &raw_config, std::ostream &log) {
    return guarded("evaluate", log, [&] {
        const auto config = raw_config.resolved();
        const auto doc = nlohmann::json::parse(read_file(config.output_dir / ModelFile));
        const auto m = model::model_from_json(doc);
        const auto settings = split_of(doc);
        auto usable = with_targets(store::load_enriched(config.output_dir / EnrichedFile).records);
        if (usable.size() < 2) {
            fmt::print(log, "evaluate: {} usable records; need at least 2\n", usable.size());
            return static_cast<int>(EmptyResult);
        }
        auto [train, test] = model::split(usable, settings.test_fraction, settings.seed);

        nlohmann::ordered_json out;
        out["ridge_lambda"] = m.ridge_lambda;
        out["split"] = {{"seed", settings.seed}, {"test_fraction", settings.test_fraction}};
        for (const auto &[label, part] : {std::pair{"train", &train}, std::pair{"test", &test}}) {
            const auto metrics = model::evaluate(targets_of(*part), scores_of(m, *part));
            auto j = model::to_json(metrics);
            j["n"] = part->size();
            out[label] = j;
            fmt::print(log, "evaluate: {} n={} mae={} rse={} cod={}\n", label, part->size(),
                       metrics.mae, j["rse"].dump(), j["cod"].dump());
        }
        write_file_atomic(config.output_dir / MetricsFile, out.dump(2) + "\n");
        return static_cast<int>(Success);
    });
}

int cmd_report(const PipelineConfig &raw_config, std::ostream &log) {
    return guarded("report", log, [&] {
        const auto config = raw_config.resolved();
        const auto doc = nlohmann::json::parse(read_file(config.output_dir / ModelFile));
        const auto m = model::model_from_json(doc);
        const auto records = store::load_enriched(config.output_dir / EnrichedFile).records;

        std::vector<enrich::EnrichedRecord> scored = with_targets(records);
        if (!config.score_all) {
            const auto settings = split_of(doc);
            if (scored.size() < 2) {
                fmt::print(log, "report: {} usable records; need at least 2\n", scored.size());
                return static_cast<int>(EmptyResult);
            }
            scored = model::split(scored, settings.test_fraction, settings.seed).second;
            std::sort(scored.begin(), scored.end(), [](const auto &a, const auto &b) {
                return enrich::key_of(a) < enrich::key_of(b);
            });
        }

        const auto years = analytics::aggregate_by_year(records);
        const auto summaries = analytics::aggregate_by_summary(records);
        const auto comparison = analytics::comparison_series(scored, m);
        auto written = analytics::write_report(config.output_dir, years, summaries, comparison);

        if (config.charts) {
            std::vector<std::pair<std::string, double>> suspected, confirmed, incidence, by_summary;
            for (const auto &y : years) {
                suspected.emplace_back(std::to_string(y.year), static_cast<double>(y.suspected_total));
                confirmed.emplace_back(std::to_string(y.year), static_cast<double>(y.confirmed_total));
                incidence.emplace_back(std::to_string(y.year), y.incidence_sum);
            }
            for (const auto &s : summaries) {
                by_summary.emplace_back(s.weather_summary, static_cast<double>(s.record_count));
            }
            auto chart = [&](const char *file, const char *title, const auto &bars) {
                write_file_atomic(config.output_dir / file, analytics::bar_chart_svg(title, bars));
                written.push_back(config.output_dir / file);
            };
            chart("agg_year_suspected.svg", "Suspected cases by year", suspected);
            chart("agg_year_confirmed.svg", "Confirmed cases by year", confirmed);
            chart("agg_year_incidence.svg", "Sum of incidence rate by year", incidence);
            chart("agg_summary_count.svg", "Records by weather summary", by_summary);
        }
        fmt::print(log, "report: wrote {} files ({} compared records{})\n", written.size(),
                   comparison.size(), config.score_all ? ", all records" : ", test split");
        return static_cast<int>(Success);
    });
}

int run_all(const PipelineConfig &config, std::ostream &log, const Services &services) {
    if (int rc = cmd_ingest(config, log); rc != Success) {
        return rc;
    }
    if (int rc = cmd_enrich(config, log, services); rc != Success) {
        return rc;
    }
    for (auto stage : {cmd_train, cmd_evaluate, cmd_report}) {
        if (int rc = stage(config, log); rc != Success) {
            return rc;
        }
    }
    return Success;
}

} // namespace epiforge::pipeline
