#include "epiforge/analytics.hpp"
#include "epiforge/csv.hpp"
#include "epiforge/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <numeric>

namespace epiforge::analytics {

namespace {

double sorted_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0);
}

// Shortest text that parses back to the same double.
std::string number(double v) { return fmt::format("{}", v); }

template <class Base>
std::vector<YearAggregate> by_year(const std::vector<Base> &records,
                                   const ingest::CleanRecord &(*base)(const Base &)) {
    struct Group {
        YearAggregate agg;
        std::vector<double> incidence;
    };
    std::map<int, Group> groups;
    for (const auto &r : records) {
        const auto &b = base(r);
        auto &g = groups[b.year];
        g.agg.year = b.year;
        g.agg.suspected_total += b.suspected;
        g.agg.confirmed_total += b.confirmed;
        g.agg.record_count += 1;
        if (b.incidence_rate) {
            g.incidence.push_back(*b.incidence_rate);
        }
    }
    std::vector<YearAggregate> out;
    for (auto &[year, g] : groups) {
        g.agg.incidence_sum = sorted_sum(std::move(g.incidence));
        out.push_back(g.agg);
    }
    return out;
}

} // namespace

std::vector<YearAggregate> aggregate_by_year(const std::vector<ingest::CleanRecord> &records) {
    return by_year<ingest::CleanRecord>(records,
                                        [](const ingest::CleanRecord &r) -> const auto & { return r; });
}

std::vector<YearAggregate> aggregate_by_year(const std::vector<enrich::EnrichedRecord> &records) {
    return by_year<enrich::EnrichedRecord>(
        records, [](const enrich::EnrichedRecord &r) -> const auto & { return r.base; });
}

std::vector<SummaryAggregate>
aggregate_by_summary(const std::vector<enrich::EnrichedRecord> &records) {
    std::map<std::string, std::pair<std::int64_t, std::vector<double>>> groups;
    for (const auto &r : records) {
        auto &g = groups[r.weather.summary];
        g.first += 1;
        if (r.base.incidence_rate) {
            g.second.push_back(*r.base.incidence_rate);
        }
    }
    std::vector<SummaryAggregate> out;
    for (auto &[summary, g] : groups) {
        out.push_back({summary, g.first, sorted_sum(std::move(g.second))});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
        return a.record_count > b.record_count;
    });
    return out;
}

std::vector<ComparisonRow> comparison_series(const std::vector<enrich::EnrichedRecord> &records,
                                             const model::ModelCoefficients &model) {
    std::vector<ComparisonRow> out;
    for (const auto &r : records) {
        if (!r.base.incidence_rate) {
            continue;
        }
        ComparisonRow row;
        row.key = enrich::key_of(r);
        row.actual = *r.base.incidence_rate;
        row.scored = model::predict(model, r);
        row.residual = row.actual - row.scored;
        out.push_back(std::move(row));
    }
    return out;
}

std::string year_csv(const std::vector<YearAggregate> &rows) {
    std::string out = "year,suspected_total,confirmed_total,incidence_sum,record_count\n";
    for (const auto &r : rows) {
        out += fmt::format("{},{},{},{},{}\n", r.year, r.suspected_total, r.confirmed_total,
                           number(r.incidence_sum), r.record_count);
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryAggregate> &rows) {
    std::string out = "weather_summary,record_count,incidence_sum\n";
    for (const auto &r : rows) {
        out += csv::join({r.weather_summary, std::to_string(r.record_count),
                          number(r.incidence_sum)}) +
               "\n";
    }
    return out;
}

std::string comparison_csv(const std::vector<ComparisonRow> &rows) {
    std::string out = "country,year,week,actual,scored,residual\n";
    for (const auto &r : rows) {
        out += csv::join({std::get<0>(r.key), std::to_string(std::get<1>(r.key)),
                          std::to_string(std::get<2>(r.key)), number(r.actual), number(r.scored),
                          number(r.residual)}) +
               "\n";
    }
    return out;
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path &dir,
                                                const std::vector<YearAggregate> &years,
                                                const std::vector<SummaryAggregate> &summaries,
                                                const std::vector<ComparisonRow> &comparison) {
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::filesystem::path &path, const std::string &content) {
        write_file_atomic(path, content);
        written.push_back(path);
    };
    emit(dir / "agg_year.csv", year_csv(years));
    emit(dir / "agg_summary.csv", summary_csv(summaries));

    std::map<int, std::vector<ComparisonRow>> per_year;
    for (const auto &row : comparison) {
        per_year[std::get<1>(row.key)].push_back(row);
    }
    for (const auto &[year, rows] : per_year) {
        emit(dir / fmt::format("compare_{}.csv", year), comparison_csv(rows));
    }
    return written;
}

std::string bar_chart_svg(const std::string &title,
                          const std::vector<std::pair<std::string, double>> &bars) {
    constexpr int Width = 640;
    constexpr int Height = 360;
    constexpr int Margin = 48;
    auto escape = [](const std::string &s) {
        std::string out;
        for (char c : s) {
            switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
            }
        }
        return out;
    };

    double max_value = 0.0;
    for (const auto &[label, value] : bars) {
        max_value = std::max(max_value, value);
    }
    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n"
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        Width, Height, Width / 2, escape(title));
    const double plot_h = Height - 2.0 * Margin;
    const double slot = bars.empty() ? 0.0 : (Width - 2.0 * Margin) / static_cast<double>(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto &[label, value] = bars[i];
        const double h = max_value > 0.0 ? plot_h * std::max(value, 0.0) / max_value : 0.0;
        const double x = Margin + slot * static_cast<double>(i) + slot * 0.1;
        const double y = Height - Margin - h;
        svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
                           "fill=\"#4a78a8\"/>\n",
                           x, y, slot * 0.8, h);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                           x + slot * 0.4, Height - Margin + 14, escape(label));
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                           x + slot * 0.4, y - 4, number(value));
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace epiforge::analytics
