#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

namespace epiforge::ingest {

/// One uncleaned table row, exactly as read from a report file.
struct RawReportRow {
    std::string country_raw;
    std::string epi_week_raw;
    std::string suspected_raw;
    std::string confirmed_raw;
    std::string imported_raw;
    std::string deaths_raw;
    std::string incidence_raw;
    std::string population_k_raw;
    int year = 0;
    std::string source_file;
    int source_line = 0;
};

/// A validated surveillance record keyed by (country, year, week).
struct CleanRecord {
    std::string country;
    int year = 0;
    int week = 0;
    std::int64_t suspected = 0;
    std::int64_t confirmed = 0;
    std::optional<std::int64_t> imported;
    std::optional<std::int64_t> deaths;
    std::optional<double> incidence_rate; ///< cases per 100,000
    std::optional<std::int64_t> population_k;
    std::string source_file;
    int source_line = 0;

    friend bool operator==(const CleanRecord &, const CleanRecord &) = default;
};

using RecordKey = std::tuple<std::string, int, int>;

inline RecordKey key_of(const CleanRecord &r) { return {r.country, r.year, r.week}; }

enum class RejectCode {
    MissingWeek,
    MissingSuspected,
    MissingConfirmed,
    UnparseableNumber,
    EmptyCountry,
    WeekOutOfRange,
};

std::string_view to_string(RejectCode code);

struct RejectReason {
    std::string source_file;
    int source_line = 0;
    RejectCode code{};
    std::string detail;
};

/// Fatal problems with a whole file (unreadable, unknown header, no year).
class ReportFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The eight report columns, in canonical order.
const std::vector<std::string> &expected_columns();

struct ParsedReport {
    std::vector<RawReportRow> rows;
    std::vector<RejectReason> rejects;
};

/// Parses one report table. The first non-blank line must be a header naming
/// all eight report columns (any order, case-insensitive) plus an optional
/// `Year` column, which overrides `year` row by row. Blank lines and
/// note/footer lines are skipped. Only rows that cannot be mapped onto the
/// header (bad `Year` cell, extra non-empty cells) are rejected here; field
/// validation is left to validate_row.
ParsedReport parse_report_file(std::string_view content, std::optional<int> year,
                               std::string_view source_file);

/// Reads and parses a report file from disk. Throws ReportFormatError naming
/// the file when it cannot be read.
ParsedReport parse_report_path(const std::string &path, std::optional<int> year);

/// Removes the conversion garbage tokens, trims whitespace and strips
/// trailing 'g' characters, repeating until the string stops changing.
/// Returns nullopt when nothing is left.
std::optional<std::string> clean_country_name(std::string_view raw);

/// Week number from strings such as "WEEK 23", "Week52" or "7".
std::optional<int> normalize_week(std::string_view raw);

/// Population in thousands with thousands separators removed; nullopt when
/// absent, unparseable or zero.
std::optional<std::int64_t> normalize_population(std::string_view raw);

std::variant<CleanRecord, RejectReason> validate_row(const RawReportRow &row);

/// At most one record per key; on conflict the lexicographically latest
/// source file wins (then the later line). Output is sorted by key.
std::vector<CleanRecord> dedupe(std::vector<CleanRecord> records);

/// PHP-style trim of " \t\n\r\0\x0B".
std::string_view trim(std::string_view s);

} // namespace epiforge::ingest
