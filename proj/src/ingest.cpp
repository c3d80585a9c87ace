#include "epiforge/ingest.hpp"
#include "epiforge/csv.hpp"
#include "epiforge/epiweek.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace epiforge::ingest {

namespace {

// Removal order matters: "(^)" must go before "^".
constexpr std::array<std::string_view, 12> GarbageTokens = {
    ">", "*", "(1)", "(2)", "(^)", "()", "#", "^", "?", "$", "/", "&"};

enum Column { Country, Week, Suspected, Confirmed, Imported, Deaths, Incidence, Population };

std::string lower_collapsed(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) {
            out.push_back(' ');
        }
        space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

void remove_all(std::string &s, std::string_view token) {
    for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos)) {
        s.erase(pos, token.size());
    }
}

bool is_blank(const csv::Row &row) {
    return std::all_of(row.cells.begin(), row.cells.end(),
                       [](const std::string &c) { return trim(c).empty(); });
}

bool is_note_line(const csv::Row &row) {
    const std::size_t filled = std::count_if(row.cells.begin(), row.cells.end(),
                                             [](const std::string &c) { return !trim(c).empty(); });
    const std::string first = lower_collapsed(row.cells.front());
    if (row.cells.size() == 1) {
        return true;
    }
    if (first == "total" || first == "subtotal" || first.rfind("total ", 0) == 0) {
        return true;
    }
    if (filled == 1 && !first.empty()) {
        for (std::string_view prefix : {"note", "source", "data source", "*", "footnote"}) {
            if (first.rfind(prefix, 0) == 0) {
                return true;
            }
        }
    }
    return false;
}

std::string without_commas(std::string_view raw) {
    std::string s;
    for (char c : raw) {
        if (c != ',') {
            s.push_back(c);
        }
    }
    return std::string(trim(s));
}

std::optional<std::int64_t> parse_count(std::string_view raw) {
    const std::string s = without_commas(raw);
    if (s.empty() ||
        !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return std::nullopt;
    }
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

std::optional<double> parse_rate(std::string_view raw) {
    const std::string s = without_commas(raw);
    const auto dot = std::count(s.begin(), s.end(), '.');
    const bool digits_and_dot = std::all_of(
        s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) || c == '.'; });
    if (s.empty() || !digits_and_dot || dot > 1 || s == ".") {
        return std::nullopt;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

std::string week_remainder(std::string_view raw) {
    std::string s(raw);
    remove_all(s, "WEEK");
    remove_all(s, "Week");
    std::erase_if(s, [](unsigned char c) { return std::isalpha(c); });
    return std::string(trim(s));
}

} // namespace

std::string_view to_string(RejectCode code) {
    switch (code) {
    case RejectCode::MissingWeek:
        return "MissingWeek";
    case RejectCode::MissingSuspected:
        return "MissingSuspected";
    case RejectCode::MissingConfirmed:
        return "MissingConfirmed";
    case RejectCode::UnparseableNumber:
        return "UnparseableNumber";
    case RejectCode::EmptyCountry:
        return "EmptyCountry";
    case RejectCode::WeekOutOfRange:
        return "WeekOutOfRange";
    }
    return "Unknown";
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws{" \t\n\r\0\x0B", 6};
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

const std::vector<std::string> &expected_columns() {
    static const std::vector<std::string> columns = {
        "Country",      "Epidemiological Weeks", "Suspected Cases", "Confirmed Cases",
        "Imported Cases", "Deaths",              "Incidence Rate",  "Population X 1000"};
    return columns;
}

ParsedReport parse_report_file(std::string_view content, std::optional<int> year,
                               std::string_view source_file) {
    const auto rows = csv::parse(content);
    auto it = std::find_if(rows.begin(), rows.end(), [](const csv::Row &r) { return !is_blank(r); });

    ParsedReport out;
    if (it == rows.end()) {
        return out;
    }

    std::map<std::string, std::size_t> header;
    for (std::size_t i = 0; i < it->cells.size(); ++i) {
        header.emplace(lower_collapsed(it->cells[i]), i);
    }
    std::array<std::size_t, 8> index{};
    std::vector<std::string> missing;
    for (std::size_t c = 0; c < expected_columns().size(); ++c) {
        auto found = header.find(lower_collapsed(expected_columns()[c]));
        if (found == header.end()) {
            missing.push_back(expected_columns()[c]);
        } else {
            index[c] = found->second;
        }
    }
    if (!missing.empty()) {
        std::string expected;
        for (const auto &name : expected_columns()) {
            expected += (expected.empty() ? "" : ", ") + name;
        }
        throw ReportFormatError(fmt::format("{}: unrecognised header (missing {}); expected columns: {}",
                                            source_file, fmt::join(missing, ", "), expected));
    }
    std::optional<std::size_t> year_column;
    if (auto found = header.find("year"); found != header.end()) {
        year_column = found->second;
    }
    if (!year_column && !year) {
        throw ReportFormatError(
            fmt::format("{}: no Year column and no year supplied for the file", source_file));
    }
    const std::size_t width = it->cells.size();

    for (++it; it != rows.end(); ++it) {
        if (is_blank(*it) || is_note_line(*it)) {
            continue;
        }
        const auto &cells = it->cells;
        auto reject = [&](std::string detail) {
            out.rejects.push_back({std::string(source_file), it->line,
                                   RejectCode::UnparseableNumber, std::move(detail)});
        };

        if (cells.size() > width &&
            std::any_of(cells.begin() + width, cells.end(),
                        [](const std::string &c) { return !trim(c).empty(); })) {
            reject(fmt::format("row has {} cells, header has {}", cells.size(), width));
            continue;
        }
        auto cell = [&](std::size_t i) { return i < cells.size() ? cells[i] : std::string{}; };

        int row_year = year.value_or(0);
        if (year_column) {
            const std::string text(trim(cell(*year_column)));
            if (!text.empty()) {
                int parsed = 0;
                auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
                if (ec != std::errc{} || ptr != text.data() + text.size()) {
                    reject(fmt::format("bad Year value '{}'", text));
                    continue;
                }
                row_year = parsed;
            } else if (!year) {
                reject("blank Year value and no year supplied for the file");
                continue;
            }
        }

        RawReportRow row;
        row.country_raw = cell(index[Country]);
        row.epi_week_raw = cell(index[Week]);
        row.suspected_raw = cell(index[Suspected]);
        row.confirmed_raw = cell(index[Confirmed]);
        row.imported_raw = cell(index[Imported]);
        row.deaths_raw = cell(index[Deaths]);
        row.incidence_raw = cell(index[Incidence]);
        row.population_k_raw = cell(index[Population]);
        row.year = row_year;
        row.source_file = std::string(source_file);
        row.source_line = it->line;
        out.rows.push_back(std::move(row));
    }
    return out;
}

ParsedReport parse_report_path(const std::string &path, std::optional<int> year) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ReportFormatError(fmt::format("{}: cannot open report file", path));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw ReportFormatError(fmt::format("{}: read error", path));
    }
    return parse_report_file(buffer.str(), year, path);
}

std::optional<std::string> clean_country_name(std::string_view raw) {
    std::string current(raw);
    while (true) {
        std::string next = current;
        for (auto token : GarbageTokens) {
            remove_all(next, token);
        }
        next = std::string(trim(next));
        while (!next.empty() && next.back() == 'g') {
            next.pop_back();
        }
        if (next == current) {
            break;
        }
        current = std::move(next);
    }
    if (current.empty()) {
        return std::nullopt;
    }
    return current;
}

std::optional<int> normalize_week(std::string_view raw) {
    const std::string s = week_remainder(raw);
    if (s.empty() || s.size() > 9 ||
        !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return std::nullopt;
    }
    return std::stoi(s);
}

std::optional<std::int64_t> normalize_population(std::string_view raw) {
    auto value = parse_count(raw);
    if (!value || *value == 0) {
        return std::nullopt;
    }
    return value;
}

std::variant<CleanRecord, RejectReason> validate_row(const RawReportRow &row) {
    auto reject = [&](RejectCode code, std::string detail) {
        return RejectReason{row.source_file, row.source_line, code, std::move(detail)};
    };

    CleanRecord rec;
    auto country = clean_country_name(row.country_raw);
    if (!country) {
        return reject(RejectCode::EmptyCountry,
                      fmt::format("country '{}' is empty after cleaning", row.country_raw));
    }
    rec.country = std::move(*country);
    rec.year = row.year;

    if (week_remainder(row.epi_week_raw).empty()) {
        return reject(RejectCode::MissingWeek,
                      fmt::format("no week number in '{}'", row.epi_week_raw));
    }
    auto week = normalize_week(row.epi_week_raw);
    if (!week) {
        return reject(RejectCode::UnparseableNumber,
                      fmt::format("week '{}' is not a number", row.epi_week_raw));
    }
    const int limit = epiweek::iso_weeks_in_year(row.year);
    if (*week < 1 || *week > limit) {
        return reject(RejectCode::WeekOutOfRange,
                      fmt::format("week {} outside [1, {}] for {}", *week, limit, row.year));
    }
    rec.week = *week;

    auto required = [&](const std::string &raw, RejectCode missing, std::string_view name,
                        std::int64_t &target) -> std::optional<RejectReason> {
        if (trim(raw).empty()) {
            return reject(missing, fmt::format("{} is blank", name));
        }
        auto value = parse_count(raw);
        if (!value) {
            return reject(RejectCode::UnparseableNumber,
                          fmt::format("{} '{}' is not a non-negative integer", name, raw));
        }
        target = *value;
        return std::nullopt;
    };
    if (auto r = required(row.suspected_raw, RejectCode::MissingSuspected, "suspected",
                          rec.suspected)) {
        return *r;
    }
    if (auto r = required(row.confirmed_raw, RejectCode::MissingConfirmed, "confirmed",
                          rec.confirmed)) {
        return *r;
    }

    auto optional_count = [&](const std::string &raw, std::string_view name,
                              std::optional<std::int64_t> &target) -> std::optional<RejectReason> {
        if (trim(raw).empty()) {
            return std::nullopt;
        }
        target = parse_count(raw);
        if (!target) {
            return reject(RejectCode::UnparseableNumber,
                          fmt::format("{} '{}' is not a non-negative integer", name, raw));
        }
        return std::nullopt;
    };
    if (auto r = optional_count(row.imported_raw, "imported", rec.imported)) {
        return *r;
    }
    if (auto r = optional_count(row.deaths_raw, "deaths", rec.deaths)) {
        return *r;
    }
    if (!trim(row.incidence_raw).empty()) {
        rec.incidence_rate = parse_rate(row.incidence_raw);
        if (!rec.incidence_rate) {
            return reject(RejectCode::UnparseableNumber,
                          fmt::format("incidence rate '{}' is not a non-negative number",
                                      row.incidence_raw));
        }
    }
    rec.population_k = normalize_population(row.population_k_raw);
    rec.source_file = row.source_file;
    rec.source_line = row.source_line;
    return rec;
}

std::vector<CleanRecord> dedupe(std::vector<CleanRecord> records) {
    std::sort(records.begin(), records.end(), [](const CleanRecord &a, const CleanRecord &b) {
        if (key_of(a) != key_of(b)) {
            return key_of(a) < key_of(b);
        }
        return std::tie(a.source_file, a.source_line) > std::tie(b.source_file, b.source_line);
    });
    auto last = std::unique(records.begin(), records.end(),
                            [](const CleanRecord &a, const CleanRecord &b) {
                                return key_of(a) == key_of(b);
                            });
    records.erase(last, records.end());
    return records;
}

} // namespace epiforge::ingest
