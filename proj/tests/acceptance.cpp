// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// fails.
#include "epiforge/analytics.hpp"
#include "epiforge/dataset.hpp"
#include "epiforge/epiweek.hpp"
#include "epiforge/ingest.hpp"
#include "epiforge/model.hpp"
#include "epiforge/pipeline.hpp"
#include "oracle.hpp"
#include "support.hpp"

#include <boost/date_time/gregorian/gregorian.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace epiforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

const fs::path Sample = EPIFORGE_SAMPLE_DIR;

// -- metrics ---------------------------------------------------------------

Outcome metric_identity() {
    // Two points with SS_tot = 2 and SS_res = 2 * 0.422802.
    const double residual = std::sqrt(2.0 * 0.422802);
    auto m = model::evaluate({0.0, 2.0}, {0.0, 2.0 - residual});
    const bool identity = *m.cod == 1.0 - *m.rse;
    const double gap = std::abs(*m.cod - 0.577198);
    const double table_gap = std::abs((1.0 - 0.422802) - 0.577198);
    return {identity && gap <= 1e-6 && table_gap <= 1e-6,
            fmt::format("rse={:.6f} cod={:.6f} |cod-0.577198|={:.1e}", *m.rse, *m.cod, gap)};
}

Outcome metric_oracle() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> len(1, 50);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    double worst = 0.0;
    int undefined_mismatch = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> y(len(rng)), yhat(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = t % 97 == 0 ? 3.0 : u(rng);
            yhat[i] = y[i] + u(rng) * 0.3;
        }
        auto got = model::evaluate(y, yhat);
        auto want = oracle::metrics(y, yhat);
        worst = std::max(worst, std::abs(got.mae - want.mae));
        if (got.rse.has_value() != want.rse.has_value()) {
            ++undefined_mismatch;
            continue;
        }
        if (want.rse) {
            worst = std::max({worst, std::abs(*got.rse - *want.rse), std::abs(*got.cod - *want.cod)});
        }
    }
    return {worst <= 1e-12 && undefined_mismatch == 0,
            fmt::format("1000 pairs, max deviation {:.1e}", worst)};
}

// -- fitting ---------------------------------------------------------------

Outcome ols_recovery() {
    std::mt19937_64 rng(102);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 200, p = 6;
    std::vector<double> w_true(p + 1);
    for (auto &w : w_true) {
        w = g(rng) * 4.0;
    }
    model::FeatureMatrix x;
    x.rows = n;
    x.cols = p + 1;
    for (std::size_t r = 0; r < n; ++r) {
        double y = 0.0;
        for (std::size_t c = 0; c <= p; ++c) {
            double v = c == p ? 1.0 : g(rng);
            x.values.push_back(v);
            y += v * w_true[c];
        }
        x.targets.push_back(y);
    }
    auto fitted = model::fit(x, 0.0);
    double worst = 0.0;
    for (std::size_t c = 0; c <= p; ++c) {
        worst = std::max(worst, std::abs(fitted.weights[c] - w_true[c]));
    }
    std::vector<double> scored(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c <= p; ++c) {
            scored[r] += x.at(r, c) * fitted.weights[c];
        }
    }
    auto m = model::evaluate(x.targets, scored);
    const double cod_gap = std::abs(*m.cod - 1.0);
    return {worst <= 1e-8 && cod_gap <= 1e-12,
            fmt::format("max |w-w*|={:.1e}, |cod-1|={:.1e}", worst, cod_gap)};
}

Outcome ridge_equivalence() {
    std::mt19937_64 rng(103);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = 30, p = 8;
    double worst = 0.0;
    int systems = 0;
    for (int t = 0; t < 100; ++t) {
        model::FeatureMatrix x;
        x.rows = n;
        x.cols = p;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < p; ++c) {
                x.values.push_back(c + 1 == p ? 1.0 : g(rng));
            }
            x.targets.push_back(g(rng) * 10.0);
        }
        std::vector<bool> penalty(p, true);
        penalty.back() = false;
        for (double lambda : {0.001, 0.1, 1.0, 10.0}) {
            auto fitted = model::fit(x, lambda);
            auto want = oracle::ridge_normal_equations(x.values, x.targets, n, p, lambda, penalty);
            for (std::size_t c = 0; c < p; ++c) {
                worst = std::max(worst, std::abs(fitted.weights[c] - want[c]));
            }
            ++systems;
        }
    }
    return {worst <= 1e-6, fmt::format("{} systems, max deviation {:.1e}", systems, worst)};
}

// -- calendar --------------------------------------------------------------

Outcome calendar_oracle() {
    namespace bg = boost::gregorian;
    int pairs = 0, mismatches = 0, not_monday = 0, bad_week1 = 0;
    for (int y = 2013; y <= 2017; ++y) {
        const int weeks = bg::date(y, 12, 28).week_number();
        if (weeks != epiweek::iso_weeks_in_year(y)) {
            ++mismatches;
        }
        bg::date jan4(y, 1, 4);
        bg::date monday1 = jan4 - bg::days((jan4.day_of_week().as_number() + 6) % 7);
        for (int w = 1; w <= weeks; ++w) {
            ++pairs;
            bg::date want = monday1 + bg::weeks(w - 1);
            std::chrono::year_month_day got{epiweek::epiweek_to_date(y, w)};
            if (int(got.year()) != want.year() ||
                unsigned(got.month()) != want.month().as_number() ||
                unsigned(got.day()) != want.day().as_number() || want.week_number() != w) {
                ++mismatches;
            }
            if (std::chrono::weekday{epiweek::epiweek_to_date(y, w)} != std::chrono::Monday) {
                ++not_monday;
            }
        }
        auto w1 = epiweek::epiweek_to_date(y, 1);
        auto j4 = std::chrono::sys_days{std::chrono::year{y} / 1 / 4};
        if (!(w1 <= j4 && j4 < w1 + std::chrono::days{7})) {
            ++bad_week1;
        }
    }
    return {pairs == 261 && mismatches == 0 && not_monday == 0 && bad_week1 == 0,
            fmt::format("{} pairs, {} mismatches, {} non-Mondays, {} week-1 failures", pairs,
                        mismatches, not_monday, bad_week1)};
}

// -- cleaning --------------------------------------------------------------

enum class Field { Country, Week, Population };

struct GoldenCase {
    Field field;
    std::string raw;
    std::optional<std::string> want;
};

const std::vector<GoldenCase> &golden_table() {
    static const std::vector<GoldenCase> table{
        {Field::Country, "Dominican Republicg", "Dominican Republic"},
        {Field::Country, "Mexico", "Mexico"},
        {Field::Country, " Haiti#^ ", "Haiti"},
        {Field::Country, "Cuba>", "Cuba"},
        {Field::Country, "Peru*", "Peru"},
        {Field::Country, "Colombia (1)", "Colombia"},
        {Field::Country, "Brazil(2)", "Brazil"},
        {Field::Country, "Venezuela (^)", "Venezuela"},
        {Field::Country, "Aruba ()", "Aruba"},
        {Field::Country, "Guadeloupe#", "Guadeloupe"},
        {Field::Country, "Martinique^", "Martinique"},
        {Field::Country, "Bolivia?", "Bolivia"},
        {Field::Country, "Ecuador$", "Ecuador"},
        {Field::Country, "Trinidad/Tobago", "TrinidadTobago"},
        {Field::Country, "Antigua&Barbuda", "AntiguaBarbuda"},
        {Field::Country, "Saint Martin (1)(2)g", "Saint Martin"},
        {Field::Country, "\tJamaica*g\n", "Jamaica"},
        {Field::Country, "Belize (^)*#", "Belize"},
        {Field::Country, "El Salvador >>", "El Salvador"},
        {Field::Country, "Puerto Rico$?", "Puerto Rico"},
        {Field::Country, "Nicaragua((1))", "Nicaragua"},
        {Field::Country, "Honduras^ggg", "Honduras"},
        {Field::Country, "Guyana (2)/&", "Guyana"},
        {Field::Country, "Grenada#^?$ g", "Grenada"},
        {Field::Country, "*#^", std::nullopt},
        {Field::Country, "  ", std::nullopt},
        {Field::Week, "WEEK 23", "23"},
        {Field::Week, "7", "7"},
        {Field::Week, "Week52", "52"},
        {Field::Week, "WEek 9", "9"},
        {Field::Week, "week 01", "1"},
        {Field::Week, " Week 14 ", "14"},
        {Field::Week, "Wk5", "5"},
        {Field::Week, "Week", std::nullopt},
        {Field::Week, "", std::nullopt},
        {Field::Population, "10,500", "10500"},
        {Field::Population, "900", "900"},
        {Field::Population, "1,234,567", "1234567"},
        {Field::Population, "n/a", std::nullopt},
        {Field::Population, "0", std::nullopt},
    };
    return table;
}

std::optional<std::string> normalize_field(Field field, std::string_view raw) {
    switch (field) {
    case Field::Country:
        return ingest::clean_country_name(raw);
    case Field::Week:
        if (auto w = ingest::normalize_week(raw)) {
            return std::to_string(*w);
        }
        return std::nullopt;
    case Field::Population:
        if (auto p = ingest::normalize_population(raw)) {
            return std::to_string(*p);
        }
        return std::nullopt;
    }
    return std::nullopt;
}

Outcome cleaning_corpus() {
    int wrong = 0;
    std::string first_wrong;
    for (const auto &c : golden_table()) {
        if (normalize_field(c.field, c.raw) != c.want) {
            if (wrong++ == 0) {
                first_wrong = c.raw;
            }
        }
    }
    std::mt19937_64 rng(104);
    int not_idempotent = 0;
    for (int t = 0; t < 10000; ++t) {
        auto s = testing::random_string(rng, 30);
        for (Field f : {Field::Country, Field::Week, Field::Population}) {
            auto once = normalize_field(f, s);
            if (once && normalize_field(f, *once) != once) {
                ++not_idempotent;
            }
        }
    }
    return {golden_table().size() == 40 && wrong == 0 && not_idempotent == 0,
            fmt::format("{} golden cases, {} wrong{}; 10000 random trials, {} not idempotent",
                        golden_table().size(), wrong,
                        wrong ? " (first: '" + first_wrong + "')" : "", not_idempotent)};
}

// -- pipeline --------------------------------------------------------------

int run_cli(const std::string &args, const fs::path &log) {
    std::string cmd =
        std::string("\"") + EPIFORGE_CLI + "\" " + args + " >\"" + log.string() + "\" 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> artifacts(const fs::path &dir) {
    std::map<std::string, std::string> out;
    for (const auto &entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            out[entry.path().filename().string()] = testing::slurp(entry.path());
        }
    }
    return out;
}

struct SampleRuns {
    int rc[2] = {-1, -1};
    std::map<std::string, std::string> files[2];
};

const SampleRuns &sample_runs(const testing::TempDir &dir) {
    static SampleRuns runs = [&] {
        SampleRuns r;
        for (int i = 0; i < 2; ++i) {
            auto out = dir / ("run" + std::to_string(i));
            r.rc[i] = run_cli("run-all --offline --input \"" + (Sample / "reports").string() +
                                  "\" --fixtures \"" + (Sample / "fixtures").string() +
                                  "\" --out \"" + out.string() + "\"",
                              dir / ("run" + std::to_string(i) + ".log"));
            if (fs::exists(out)) {
                r.files[i] = artifacts(out);
            }
        }
        return r;
    }();
    return runs;
}

Outcome pipeline_determinism(const testing::TempDir &dir) {
    const auto &runs = sample_runs(dir);
    const std::vector<std::string> required{"clean.ejsonl", "enriched.ejsonl", "model.json",
                                            "metrics.json", "agg_year.csv", "agg_summary.csv"};
    int missing = 0;
    for (const auto &name : required) {
        missing += runs.files[0].count(name) == 0;
    }
    std::vector<std::string> differing;
    for (const auto &[name, content] : runs.files[0]) {
        auto it = runs.files[1].find(name);
        if (it == runs.files[1].end() || it->second != content) {
            differing.push_back(name);
        }
    }
    const bool same_set = runs.files[0].size() == runs.files[1].size();
    return {runs.rc[0] == 0 && runs.rc[1] == 0 && missing == 0 && same_set && differing.empty(),
            fmt::format("exit codes {}/{}, {} files compared, {} differ, {} required missing",
                        runs.rc[0], runs.rc[1], runs.files[0].size(), differing.size(), missing)};
}

Outcome exclusion_rule(const testing::TempDir &dir) {
    const auto &runs = sample_runs(dir);
    if (runs.files[0].count("enriched.ejsonl") == 0 || runs.files[0].count("excluded.csv") == 0) {
        return {false, "run-all produced no enriched/excluded files"};
    }
    const std::set<ingest::RecordKey> designated{{"Peru", 2015, 34}, {"Venezuela", 2016, 6}};
    auto enriched = store::parse_enriched(runs.files[0].at("enriched.ejsonl"));
    auto clean = store::parse_clean(runs.files[0].at("clean.ejsonl"));

    std::set<ingest::RecordKey> excluded_csv;
    std::istringstream in(runs.files[0].at("excluded.csv"));
    std::string line;
    std::getline(in, line);
    bool reasons_ok = true;
    while (std::getline(in, line)) {
        std::istringstream cells(line);
        std::string country, year, week, reason;
        std::getline(cells, country, ',');
        std::getline(cells, year, ',');
        std::getline(cells, week, ',');
        std::getline(cells, reason, ',');
        excluded_csv.insert({country, std::stoi(year), std::stoi(week)});
        reasons_ok = reasons_ok && reason == "WeatherUnavailable";
    }
    int leaked = 0;
    std::set<ingest::RecordKey> enriched_keys;
    for (const auto &r : enriched.records) {
        enriched_keys.insert(enrich::key_of(r));
        leaked += designated.count(enrich::key_of(r));
    }
    std::set<ingest::RecordKey> dataset_exclusions;
    for (const auto &e : enriched.exclusions) {
        dataset_exclusions.insert(e.key);
    }
    const bool covered = enriched_keys.size() + excluded_csv.size() == clean.records.size();
    return {excluded_csv == designated && dataset_exclusions == designated && leaked == 0 &&
                reasons_ok && covered,
            fmt::format("{} clean -> {} enriched + {} excluded; designated rows leaked: {}",
                        clean.records.size(), enriched_keys.size(), excluded_csv.size(), leaked)};
}

Outcome budget_safety() {
    testing::TempDir dir("budget");
    pipeline::PipelineConfig config;
    config.input_dir = Sample / "reports";
    config.output_dir = dir / "out";
    config.cache_dir = dir / "cache";
    config.offline = true;
    config.budget_weather = 10;
    config.jobs = 4;
    std::ostringstream log;
    if (pipeline::cmd_ingest(config, log) != pipeline::Success) {
        return {false, "ingest failed: " + log.str()};
    }
    const auto rows = store::load_clean(config.output_dir / "clean.ejsonl").records.size();

    testing::CountingProvider provider;
    auto weather_calls = [&] {
        int n = 0;
        for (const auto &[path, count] : provider.calls()) {
            n += path.rfind("weather/", 0) == 0 ? count : 0;
        }
        return n;
    };
    using std::chrono::days;
    const auto day0 = std::chrono::sys_days{std::chrono::year{2020} / 6 / 1};
    pipeline::Services first{nullptr, &provider, [&] { return day0; }};
    const int rc1 = pipeline::cmd_enrich(config, log, first);
    const int calls1 = weather_calls();

    config.budget_weather = 1000;
    pipeline::Services resume{nullptr, &provider, [&] { return day0 + days{1}; }};
    const int rc2 = pipeline::cmd_enrich(config, log, resume);
    const int calls2 = weather_calls() - calls1;
    const auto enriched = store::load_enriched(config.output_dir / "enriched.ejsonl");

    return {rows == 50 && rc1 == pipeline::BudgetPause && calls1 == 10 && rc2 == 0 &&
                calls2 == 40 && provider.max_per_key() == 1 && enriched.records.size() == 50,
            fmt::format("{} rows, limit 10: {} weather calls, exit {}; resume: {} more calls, exit "
                        "{}, {} enriched, max requests per key {}",
                        rows, calls1, rc1, calls2, rc2, enriched.records.size(),
                        provider.max_per_key())};
}

// -- aggregation -----------------------------------------------------------

Outcome aggregation_conservation() {
    std::mt19937_64 rng(105);
    const std::vector<std::string> summaries{"Clear", "Humid and Overcast", "Rain", "Drizzle"};
    std::uniform_int_distribution<int> n(0, 60), y(2013, 2017), s(0, 3), big(0, 1000000);
    std::uniform_real_distribution<double> u(0.0, 400.0);
    int failures = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<enrich::EnrichedRecord> rs;
        for (int i = 0, m = n(rng); i < m; ++i) {
            auto r = testing::enriched("C" + std::to_string(i), y(rng), 1 + i % 52,
                                       i % 3 ? std::optional<double>(u(rng)) : std::nullopt,
                                       summaries[s(rng)]);
            r.base.suspected = big(rng);
            r.base.confirmed = big(rng);
            rs.push_back(r);
        }
        struct YearOracle {
            std::int64_t suspected = 0, confirmed = 0, count = 0;
            long double incidence = 0.0L;
        };
        std::map<int, YearOracle> years;
        std::map<std::string, std::pair<std::int64_t, long double>> sums;
        for (const auto &r : rs) {
            auto &yo = years[r.base.year];
            yo.suspected += r.base.suspected;
            yo.confirmed += r.base.confirmed;
            yo.incidence += r.base.incidence_rate.value_or(0.0);
            ++yo.count;
            auto &so = sums[r.weather.summary];
            ++so.first;
            so.second += r.base.incidence_rate.value_or(0.0);
        }
        auto got_years = analytics::aggregate_by_year(rs);
        auto got_sums = analytics::aggregate_by_summary(rs);
        bool ok = got_years.size() == years.size() && got_sums.size() == sums.size();
        for (const auto &g : got_years) {
            auto it = years.find(g.year);
            ok = ok && it != years.end() && g.suspected_total == it->second.suspected &&
                 g.confirmed_total == it->second.confirmed && g.record_count == it->second.count &&
                 std::abs(g.incidence_sum - static_cast<double>(it->second.incidence)) <= 1e-9;
        }
        std::int64_t total = 0;
        for (const auto &g : got_sums) {
            auto it = sums.find(g.weather_summary);
            ok = ok && it != sums.end() && g.record_count == it->second.first &&
                 std::abs(g.incidence_sum - static_cast<double>(it->second.second)) <= 1e-9;
            total += g.record_count;
        }
        ok = ok && total == static_cast<std::int64_t>(rs.size());
        failures += !ok;
    }
    return {failures == 0, fmt::format("1000 random sets, {} disagree with the group-by oracle",
                                       failures)};
}

} // namespace

int main() {
    testing::TempDir runs_dir("acceptance");
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"metric identity", metric_identity},
        {"metric oracle", metric_oracle},
        {"OLS recovery", ols_recovery},
        {"ridge equivalence", ridge_equivalence},
        {"calendar oracle", calendar_oracle},
        {"cleaning corpus", cleaning_corpus},
        {"pipeline determinism", [&] { return pipeline_determinism(runs_dir); }},
        {"exclusion rule", [&] { return exclusion_rule(runs_dir); }},
        {"budget safety", budget_safety},
        {"aggregation conservation", aggregation_conservation},
    };
    int failed = 0;
    for (const auto &[name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome{false, ""};
        try {
            outcome = check();
        } catch (const std::exception &e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        fmt::print("{} {:<36} {} [{:.2f}s]\n", outcome.pass ? "PASS" : "FAIL", name,
                   outcome.detail, secs);
        failed += !outcome.pass;
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
