#include "epiforge/dataset.hpp"
#include "epiforge/pipeline.hpp"
#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

using namespace epiforge;
using namespace epiforge::pipeline;
namespace fs = std::filesystem;

namespace {

const fs::path Sample = EPIFORGE_SAMPLE_DIR;

PipelineConfig sample_config(const testing::TempDir &dir) {
    PipelineConfig c;
    c.input_dir = Sample / "reports";
    c.fixtures_dir = Sample / "fixtures";
    c.output_dir = dir / "out";
    c.cache_dir = dir / "cache";
    c.offline = true;
    return c;
}

enrich::CallBudget::Clock fixed_clock(int day) {
    return [day] { return std::chrono::sys_days{std::chrono::year{2020} / 1 / 1} + std::chrono::days{day}; };
}

// Counts calls that reach the fixtures.
class CountingFixtures final : public enrich::Provider {
public:
    explicit CountingFixtures(fs::path root) : inner_(std::move(root)) {}
    enrich::ProviderResponse fetch(const enrich::ProviderRequest &r) override {
        ++calls;
        return inner_.fetch(r);
    }
    int calls = 0;

private:
    enrich::FixtureProvider inner_;
};

int run_cli(const std::string &args, const fs::path &log) {
    std::string cmd = std::string("\"") + EPIFORGE_CLI + "\" " + args + " >\"" + log.string() +
                      "\" 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t line_count(const fs::path &p) {
    auto text = testing::slurp(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("offline run over the bundled corpus") {
    testing::TempDir dir("pipe");
    auto config = sample_config(dir);
    config.score_all = true;
    std::ostringstream log;
    REQUIRE_MESSAGE(run_all(config, log, {}) == Success, log.str());
    const auto out = dir / "out";

    CHECK(testing::slurp(out / "clean.ejsonl") ==
          testing::slurp(fs::path(EPIFORGE_TEST_DATA) / "golden_clean.ejsonl"));
    auto enriched = store::load_enriched(out / "enriched.ejsonl");
    CHECK(enriched.records.size() == 48);
    CHECK(enriched.exclusions.size() == 2);
    CHECK(line_count(out / "rejects.csv") == 7);
    CHECK(testing::slurp(out / "excluded.csv").find("Peru,2015,34,WeatherUnavailable") !=
          std::string::npos);

    // --score-all compares every record with a target, per year.
    std::map<int, std::size_t> per_year;
    for (const auto &r : enriched.records) {
        if (r.base.incidence_rate) {
            ++per_year[r.base.year];
        }
    }
    for (const auto &[year, n] : per_year) {
        CHECK(line_count(out / ("compare_" + std::to_string(year) + ".csv")) == n + 1);
    }

    auto metrics = nlohmann::json::parse(testing::slurp(out / "metrics.json"));
    CHECK(metrics["test"]["n"].get<int>() > 0);
    CHECK(metrics["train"]["cod"].get<double>() == 1.0 - metrics["train"]["rse"].get<double>());
}

TEST_CASE("warm cache makes no provider calls") {
    testing::TempDir dir("warm");
    auto config = sample_config(dir);
    std::ostringstream log;
    REQUIRE(cmd_ingest(config, log) == Success);
    CountingFixtures first(config.fixtures_dir);
    REQUIRE(cmd_enrich(config, log, {nullptr, &first, fixed_clock(0)}) == Success);
    CHECK(first.calls > 0);
    auto before = testing::slurp(dir / "out/enriched.ejsonl");
    CountingFixtures second(config.fixtures_dir);
    REQUIRE(cmd_enrich(config, log, {nullptr, &second, fixed_clock(0)}) == Success);
    CHECK(second.calls == 0);
    CHECK(testing::slurp(dir / "out/enriched.ejsonl") == before);
}

TEST_CASE("seed changes the split but not the schema") {
    testing::TempDir dir("seed");
    auto config = sample_config(dir);
    std::ostringstream log;
    REQUIRE(run_all(config, log, {}) == Success);
    auto one = nlohmann::json::parse(testing::slurp(dir / "out/model.json"));
    config.seed = 7;
    REQUIRE(cmd_train(config, log) == Success);
    auto seven = nlohmann::json::parse(testing::slurp(dir / "out/model.json"));
    CHECK(one["columns"] == seven["columns"]);
    CHECK(one["split"]["seed"] != seven["split"]["seed"]);
    CHECK(one["weights"] != seven["weights"]);
}

TEST_CASE("empty and unusable inputs") {
    testing::TempDir dir("empty");
    auto config = sample_config(dir);
    config.input_dir = dir / "reports";
    fs::create_directories(config.input_dir);
    std::ostringstream log;
    CHECK(cmd_ingest(config, log) == EmptyResult);
    CHECK(log.str().find("no") != std::string::npos);

    config.input_dir = dir / "missing";
    CHECK(cmd_ingest(config, log) != Success);

    testing::spit(dir / "bad/r.csv", "Country,Week\nCuba,1\n");
    config.input_dir = dir / "bad";
    CHECK(cmd_ingest(config, log) == EmptyResult);
}

TEST_CASE("live mode without keys fails before any call") {
    testing::TempDir dir("keys");
    auto config = sample_config(dir);
    config.offline = false;
    std::ostringstream log;
    REQUIRE(cmd_ingest(config, log) == Success);
    ::unsetenv("GEOCODE_API_KEY");
    ::unsetenv("TIMEZONE_API_KEY");
    ::unsetenv("WEATHER_API_KEY");
    bool built = false;
    Services services;
    services.live_provider = [&](const PipelineConfig &, const ApiKeys &) {
        built = true;
        return std::unique_ptr<enrich::Provider>();
    };
    CHECK(cmd_enrich(config, log, services) == Fatal);
    CHECK_FALSE(built);
    CHECK(log.str().find("WEATHER_API_KEY") != std::string::npos);
}

TEST_CASE("stages need their inputs") {
    testing::TempDir dir("order");
    auto config = sample_config(dir);
    std::ostringstream log;
    CHECK(cmd_enrich(config, log, {}) == Fatal);
    CHECK(cmd_train(config, log) == Fatal);
    CHECK(cmd_evaluate(config, log) == Fatal);
    CHECK(cmd_report(config, log) == Fatal);
}

TEST_CASE("command line") {
    testing::TempDir dir("cli");
    const auto log = dir / "log.txt";
    const std::string common = "--offline --input \"" + (Sample / "reports").string() +
                               "\" --fixtures \"" + (Sample / "fixtures").string() +
                               "\" --out \"" + (dir / "out").string() + "\"";
    CHECK(run_cli("--help", log) == 0);
    CHECK(testing::slurp(log).find("run-all") != std::string::npos);
    CHECK(run_cli("", log) == Fatal);
    CHECK(run_cli("run-all --no-such-flag", log) == Fatal);
    CHECK(run_cli("run-all --year-range 2017", log) == Fatal);
    REQUIRE(run_cli("run-all --charts " + common, log) == Success);
    CHECK(fs::exists(dir / "out/agg_year_suspected.svg"));
    CHECK(fs::exists(dir / "out/metrics.json"));
    CHECK(run_cli("enrich --budget-weather 0 " + common + " --cache \"" +
                      (dir / "fresh").string() + "\"",
                  log) == BudgetPause);
    CHECK(run_cli("ingest --year-range 2020-2021 " + common, log) == EmptyResult);
}
