#pragma once

#include "epiforge/enrich.hpp"
#include "epiforge/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace epiforge::analytics {

struct YearAggregate {
    int year = 0;
    std::int64_t suspected_total = 0;
    std::int64_t confirmed_total = 0;
    double incidence_sum = 0.0; ///< absent incidence rates contribute nothing
    std::int64_t record_count = 0;
    friend bool operator==(const YearAggregate &, const YearAggregate &) = default;
};

struct SummaryAggregate {
    std::string weather_summary;
    std::int64_t record_count = 0;
    double incidence_sum = 0.0;
    friend bool operator==(const SummaryAggregate &, const SummaryAggregate &) = default;
};

struct ComparisonRow {
    ingest::RecordKey key;
    double actual = 0.0;
    double scored = 0.0;
    double residual = 0.0; ///< actual - scored
};

/// One row per year present, ascending. Sums are exactly permutation
/// invariant.
std::vector<YearAggregate> aggregate_by_year(const std::vector<ingest::CleanRecord> &records);
std::vector<YearAggregate> aggregate_by_year(const std::vector<enrich::EnrichedRecord> &records);

/// One row per weather summary, by descending record count then name.
std::vector<SummaryAggregate>
aggregate_by_summary(const std::vector<enrich::EnrichedRecord> &records);

/// Actual vs scored label for every record that has a target, in input
/// order.
std::vector<ComparisonRow> comparison_series(const std::vector<enrich::EnrichedRecord> &records,
                                             const model::ModelCoefficients &model);

std::string year_csv(const std::vector<YearAggregate> &rows);
std::string summary_csv(const std::vector<SummaryAggregate> &rows);
std::string comparison_csv(const std::vector<ComparisonRow> &rows);

/// Writes agg_year.csv, agg_summary.csv and one compare_<year>.csv per year
/// into `dir`; returns the paths written.
std::vector<std::filesystem::path> write_report(const std::filesystem::path &dir,
                                                const std::vector<YearAggregate> &years,
                                                const std::vector<SummaryAggregate> &summaries,
                                                const std::vector<ComparisonRow> &comparison);

/// Minimal static SVG bar chart of (label, value) pairs.
std::string bar_chart_svg(const std::string &title,
                          const std::vector<std::pair<std::string, double>> &bars);

} // namespace epiforge::analytics
