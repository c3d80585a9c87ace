#include "epiforge/model.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace epiforge::model {

namespace {

using enrich::EnrichedRecord;

constexpr std::size_t NumericCount = 14;

std::array<std::optional<double>, NumericCount> numeric_values(const EnrichedRecord &r) {
    auto opt = [](const std::optional<std::int64_t> &v) -> std::optional<double> {
        if (!v) {
            return std::nullopt;
        }
        return static_cast<double>(*v);
    };
    const auto &b = r.base;
    return {static_cast<double>(b.week),
            static_cast<double>(b.suspected),
            static_cast<double>(b.confirmed),
            opt(b.imported),
            opt(b.deaths),
            opt(b.population_k),
            static_cast<double>(b.year),
            r.geo.lat,
            r.geo.lon,
            r.weather.temperature,
            r.weather.dew_point,
            r.weather.humidity,
            r.weather.pressure,
            r.weather.wind_speed};
}

// Order-independent sum: sorting first makes the result identical for any
// permutation of the input.
double stable_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return std::accumulate(values.begin(), values.end(), 0.0);
}

std::vector<std::string> sorted_levels(const std::vector<EnrichedRecord> &records,
                                       std::string (*field)(const EnrichedRecord &)) {
    std::vector<std::string> levels;
    for (const auto &r : records) {
        levels.push_back(field(r));
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    return levels;
}

std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n) {
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
    std::uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % n;
}

} // namespace

const std::vector<std::string> &numeric_feature_names() {
    static const std::vector<std::string> names = {
        "week",          "suspected",           "confirmed",        "imported",
        "deaths",        "population_k",        "year",             "lat",
        "lon",           "weather_temperature", "weather_dewPoint", "weather_humidity",
        "weather_pressure", "weather_windSpeed"};
    return names;
}

std::size_t FeatureSchema::column_count() const {
    return numeric_features.size() + country_levels.size() + summary_levels.size() + 1;
}

std::vector<std::string> FeatureSchema::column_names() const {
    std::vector<std::string> names = numeric_features;
    for (const auto &level : country_levels) {
        names.push_back("country=" + level);
    }
    for (const auto &level : summary_levels) {
        names.push_back("weather_summary=" + level);
    }
    names.push_back("intercept");
    return names;
}

FeatureSchema learn_schema(const std::vector<EnrichedRecord> &records,
                           std::vector<std::string> *warnings) {
    if (records.empty()) {
        throw std::invalid_argument("cannot learn a feature schema from zero records");
    }
    FeatureSchema schema;
    schema.country_levels =
        sorted_levels(records, [](const EnrichedRecord &r) { return r.base.country; });
    schema.summary_levels =
        sorted_levels(records, [](const EnrichedRecord &r) { return r.weather.summary; });

    std::vector<std::array<std::optional<double>, NumericCount>> values;
    for (const auto &r : records) {
        values.push_back(numeric_values(r));
    }
    for (std::size_t c = 0; c < NumericCount; ++c) {
        std::vector<double> observed;
        for (const auto &row : values) {
            if (row[c]) {
                observed.push_back(*row[c]);
            }
        }
        const double mean =
            observed.empty() ? 0.0 : stable_sum(observed) / static_cast<double>(observed.size());
        std::vector<double> squares;
        for (const auto &row : values) {
            const double d = row[c].value_or(mean) - mean;
            squares.push_back(d * d);
        }
        const double variance = stable_sum(squares) / static_cast<double>(records.size());
        double scale = std::sqrt(variance);
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            if (warnings != nullptr) {
                warnings->push_back(fmt::format(
                    "feature '{}' has zero variance; standardization disabled",
                    schema.numeric_features[c]));
            }
            scale = 1.0;
        }
        schema.column_means.push_back(mean);
        schema.column_scales.push_back(scale);
    }
    return schema;
}

std::vector<double> encode_row(const EnrichedRecord &record, const FeatureSchema &schema) {
    if (schema.column_means.size() != schema.numeric_features.size() ||
        schema.column_scales.size() != schema.numeric_features.size() ||
        schema.numeric_features.size() != NumericCount) {
        throw std::invalid_argument("feature schema is missing standardization statistics");
    }
    std::vector<double> row(schema.column_count(), 0.0);
    const auto values = numeric_values(record);
    for (std::size_t c = 0; c < NumericCount; ++c) {
        const double mean = schema.column_means[c];
        row[c] = (values[c].value_or(mean) - mean) / schema.column_scales[c];
    }
    std::size_t offset = NumericCount;
    auto one_hot = [&](const std::vector<std::string> &levels, const std::string &value) {
        auto it = std::find(levels.begin(), levels.end(), value);
        if (it != levels.end()) {
            row[offset + static_cast<std::size_t>(it - levels.begin())] = 1.0;
        }
        offset += levels.size();
    };
    one_hot(schema.country_levels, record.base.country);
    one_hot(schema.summary_levels, record.weather.summary);
    row.back() = 1.0;
    return row;
}

FeatureMatrix encode(const std::vector<EnrichedRecord> &records, const FeatureSchema &schema,
                     bool require_targets) {
    FeatureMatrix m;
    m.schema = schema;
    m.rows = records.size();
    m.cols = schema.column_count();
    m.values.reserve(m.rows * m.cols);
    for (const auto &r : records) {
        if (!r.base.incidence_rate && require_targets) {
            throw std::invalid_argument(fmt::format("record ({}, {}, {}) has no incidence_rate",
                                                    r.base.country, r.base.year, r.base.week));
        }
        m.targets.push_back(r.base.incidence_rate.value_or(std::nan("")));
        auto row = encode_row(r, schema);
        m.values.insert(m.values.end(), row.begin(), row.end());
    }
    return m;
}

FeatureMatrix encode(const std::vector<EnrichedRecord> &records) {
    std::vector<std::string> warnings;
    auto schema = learn_schema(records, &warnings);
    auto m = encode(records, schema, true);
    m.warnings = std::move(warnings);
    return m;
}

ModelCoefficients fit(const FeatureMatrix &x, double lambda) {
    if (x.rows == 0 || x.cols == 0) {
        throw std::invalid_argument("fit needs at least one row and one column");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("ridge lambda must be a finite non-negative number");
    }
    if (x.values.size() != x.rows * x.cols || x.targets.size() != x.rows) {
        throw std::invalid_argument("feature matrix dimensions are inconsistent");
    }
    const bool all_finite =
        std::all_of(x.values.begin(), x.values.end(), [](double v) { return std::isfinite(v); }) &&
        std::all_of(x.targets.begin(), x.targets.end(), [](double v) { return std::isfinite(v); });
    if (!all_finite) {
        throw std::invalid_argument("feature matrix or targets contain non-finite values");
    }

    const auto n = static_cast<Eigen::Index>(x.rows);
    const auto p = static_cast<Eigen::Index>(x.cols);
    const Eigen::Index penalized = lambda > 0.0 ? p - 1 : 0;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + penalized, p);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + penalized);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) {
            a(r, c) = x.values[static_cast<std::size_t>(r * p + c)];
        }
        b(r) = x.targets[static_cast<std::size_t>(r)];
    }
    const double root = std::sqrt(lambda);
    for (Eigen::Index c = 0; c < penalized; ++c) {
        a(n + c, c) = root;
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    const Eigen::VectorXd w = cod.solve(b);

    ModelCoefficients model;
    model.ridge_lambda = lambda;
    model.schema = x.schema;
    model.weights.assign(w.data(), w.data() + w.size());
    if (cod.rank() < p) {
        model.warnings.push_back(fmt::format(
            "design matrix has rank {} < {} columns; using the minimum-norm solution",
            cod.rank(), p));
    }
    return model;
}

double predict(const ModelCoefficients &model, const EnrichedRecord &record) {
    const auto row = encode_row(record, model.schema);
    if (row.size() != model.weights.size()) {
        throw std::invalid_argument("model weights do not match its schema");
    }
    return std::inner_product(row.begin(), row.end(), model.weights.begin(), 0.0);
}

EvalMetrics evaluate(const std::vector<double> &actual, const std::vector<double> &predicted) {
    if (actual.empty() || actual.size() != predicted.size()) {
        throw std::invalid_argument(fmt::format(
            "evaluate needs equal non-zero lengths (got {} and {})", actual.size(),
            predicted.size()));
    }
    const auto n = static_cast<double>(actual.size());
    double abs_sum = 0.0;
    double res_sum = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        abs_sum += std::abs(e);
        res_sum += e * e;
        mean += actual[i];
    }
    mean /= n;
    double tot_sum = 0.0;
    for (double y : actual) {
        tot_sum += (y - mean) * (y - mean);
    }

    EvalMetrics m;
    m.mae = abs_sum / n;
    if (tot_sum > 0.0) {
        m.rse = res_sum / tot_sum;
        m.cod = 1.0 - *m.rse;
    }
    return m;
}

std::pair<std::vector<EnrichedRecord>, std::vector<EnrichedRecord>>
split(std::vector<EnrichedRecord> records, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test fraction must lie in (0, 1)");
    }
    if (records.size() < 2) {
        throw std::invalid_argument("split needs at least two records");
    }
    const std::size_t n = records.size();
    const auto n_test =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 1e-9));
    if (n_test == 0 || n_test == n) {
        throw std::invalid_argument(fmt::format(
            "test fraction {} leaves an empty part for {} records", test_fraction, n));
    }

    std::stable_sort(records.begin(), records.end(), [](const auto &a, const auto &b) {
        return enrich::key_of(a) < enrich::key_of(b);
    });
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(records[i], records[bounded(rng, i + 1)]);
    }

    std::vector<EnrichedRecord> test(std::make_move_iterator(records.begin()),
                                     std::make_move_iterator(records.begin() + n_test));
    std::vector<EnrichedRecord> train(std::make_move_iterator(records.begin() + n_test),
                                      std::make_move_iterator(records.end()));
    return {std::move(train), std::move(test)};
}

nlohmann::ordered_json to_json(const ModelCoefficients &model) {
    nlohmann::ordered_json j;
    const auto &s = model.schema;
    j["kind"] = "linear_regression";
    j["target"] = s.target;
    j["ridge_lambda"] = model.ridge_lambda;
    j["numeric_features"] = s.numeric_features;
    j["column_means"] = s.column_means;
    j["column_scales"] = s.column_scales;
    j["country_levels"] = s.country_levels;
    j["summary_levels"] = s.summary_levels;
    j["columns"] = s.column_names();
    j["weights"] = model.weights;
    return j;
}

ModelCoefficients model_from_json(const nlohmann::json &doc) {
    ModelCoefficients m;
    m.ridge_lambda = doc.at("ridge_lambda").get<double>();
    m.schema.target = doc.at("target").get<std::string>();
    m.schema.numeric_features = doc.at("numeric_features").get<std::vector<std::string>>();
    m.schema.column_means = doc.at("column_means").get<std::vector<double>>();
    m.schema.column_scales = doc.at("column_scales").get<std::vector<double>>();
    m.schema.country_levels = doc.at("country_levels").get<std::vector<std::string>>();
    m.schema.summary_levels = doc.at("summary_levels").get<std::vector<std::string>>();
    m.weights = doc.at("weights").get<std::vector<double>>();
    if (m.schema.numeric_features != numeric_feature_names()) {
        throw std::invalid_argument("model uses an unsupported numeric feature list");
    }
    if (m.weights.size() != m.schema.column_count()) {
        throw std::invalid_argument(fmt::format("model has {} weights for {} columns",
                                                m.weights.size(), m.schema.column_count()));
    }
    return m;
}

nlohmann::ordered_json to_json(const EvalMetrics &metrics) {
    nlohmann::ordered_json j;
    j["mae"] = metrics.mae;
    j["rse"] = metrics.rse ? nlohmann::ordered_json(*metrics.rse) : nlohmann::ordered_json(nullptr);
    j["cod"] = metrics.cod ? nlohmann::ordered_json(*metrics.cod) : nlohmann::ordered_json(nullptr);
    return j;
}

} // namespace epiforge::model
