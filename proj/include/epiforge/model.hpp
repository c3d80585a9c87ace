#pragma once

#include "epiforge/enrich.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace epiforge::model {

/// The fixed numeric feature list, in column order.
const std::vector<std::string> &numeric_feature_names();

/// Column layout of the design matrix: standardized numeric features, then
/// one indicator column per country level, then one per weather-summary
/// level, then the intercept. Levels and standardization statistics come
/// from the training records only.
struct FeatureSchema {
    std::vector<std::string> numeric_features = numeric_feature_names();
    std::vector<std::string> country_levels;
    std::vector<std::string> summary_levels;
    std::vector<double> column_means;  ///< also the imputation value for absent fields
    std::vector<double> column_scales; ///< 1 for zero-variance columns
    std::string target = "incidence_rate";

    std::size_t column_count() const;
    std::vector<std::string> column_names() const;

    friend bool operator==(const FeatureSchema &, const FeatureSchema &) = default;
};

/// Row-major design matrix with its target vector.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<double> targets;
    FeatureSchema schema;
    std::vector<std::string> warnings;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Learns levels and standardization statistics from `records`.
/// Throws std::invalid_argument when `records` is empty.
FeatureSchema learn_schema(const std::vector<enrich::EnrichedRecord> &records,
                           std::vector<std::string> *warnings = nullptr);

/// Encodes under an existing schema. Unseen categorical levels encode as all
/// zeros. With `require_targets`, a record without incidence_rate throws
/// std::invalid_argument; otherwise its target is NaN.
FeatureMatrix encode(const std::vector<enrich::EnrichedRecord> &records,
                     const FeatureSchema &schema, bool require_targets = true);

/// Learns a schema from `records` and encodes them.
FeatureMatrix encode(const std::vector<enrich::EnrichedRecord> &records);

std::vector<double> encode_row(const enrich::EnrichedRecord &record, const FeatureSchema &schema);

struct ModelCoefficients {
    std::vector<double> weights; ///< one per column; intercept last
    double ridge_lambda = 0.0;
    FeatureSchema schema;
    std::vector<std::string> warnings;
};

constexpr double DefaultRidgeLambda = 0.001;

/// Minimizes |Xw - y|^2 + lambda |w_pen|^2 where every column except the
/// trailing intercept is penalized. Solves the stacked system [X; sqrt(lambda) P]
/// by complete orthogonal decomposition, giving the minimum-norm solution
/// when the system is rank deficient.
ModelCoefficients fit(const FeatureMatrix &x, double lambda = DefaultRidgeLambda);

/// Scored label: encoded row dotted with the weights, in target units.
double predict(const ModelCoefficients &model, const enrich::EnrichedRecord &record);

struct EvalMetrics {
    double mae = 0.0;
    std::optional<double> rse; ///< nullopt when the target has zero variance
    std::optional<double> cod; ///< 1 - rse, exactly
};

/// Throws std::invalid_argument on empty or mismatched inputs.
EvalMetrics evaluate(const std::vector<double> &actual, const std::vector<double> &predicted);

/// Records sorted by key, shuffled by a seeded Fisher-Yates pass, then cut
/// into (train, test) with floor(n * test_fraction) test records. Throws
/// std::invalid_argument when either part would be empty.
std::pair<std::vector<enrich::EnrichedRecord>, std::vector<enrich::EnrichedRecord>>
split(std::vector<enrich::EnrichedRecord> records, double test_fraction, std::uint64_t seed);

nlohmann::ordered_json to_json(const ModelCoefficients &model);
ModelCoefficients model_from_json(const nlohmann::json &doc);
nlohmann::ordered_json to_json(const EvalMetrics &metrics);

} // namespace epiforge::model
