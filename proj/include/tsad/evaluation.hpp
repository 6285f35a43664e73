#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tsad/confusion.hpp"
#include "tsad/cost_models.hpp"
#include "tsad/error.hpp"
#include "tsad/matrix.hpp"
#include "tsad/resampling.hpp"

namespace tsad {

/// Tallies predicted vs actual with positive = anomaly. Throws std::invalid_argument on length mismatch.
[[nodiscard]] ConfusionCounts confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> actual);

/// An undefined ratio (0/0) is std::nullopt, never a silent zero.
struct MetricReport {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> precision;
    std::optional<double> f1;
    std::optional<double> f05;
};

enum class Metric { Sensitivity, Specificity, Precision, F1, F05 };

inline constexpr std::array<Metric, 5> kAllMetrics = {Metric::Sensitivity, Metric::Specificity, Metric::Precision,
                                                      Metric::F1, Metric::F05};

[[nodiscard]] std::string_view metric_name(Metric m);
[[nodiscard]] std::optional<double> metric_value(const MetricReport& report, Metric m);

/**
 * F-beta from counts, in the multiplied-through form
 * (1 + b^2) TP / ((1 + b^2) TP + b^2 FN + FP), so the result is a single
 * correctly rounded division whenever b^2 is a dyadic rational.
 * Undefined when precision or recall is undefined.
 */
[[nodiscard]] std::optional<double> fbeta(const ConfusionCounts& counts, double beta);

[[nodiscard]] MetricReport metrics(const ConfusionCounts& counts);

class StratificationError : public InputError {
public:
    using InputError::InputError;
};

struct FoldAssignment {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    std::vector<std::size_t> train;  ///< ascending
    std::vector<std::size_t> test;   ///< ascending
};

/**
 * k folds per repeat. Each repeat shuffles each class with its own seeded
 * stream and deals the shuffled rows round-robin, positives first, so per-fold
 * class counts and fold sizes both differ by at most one.
 */
[[nodiscard]] std::vector<FoldAssignment> repeated_stratified_kfold(std::span<const std::uint8_t> labels,
                                                                    std::size_t k, std::size_t repeats,
                                                                    std::uint64_t seed);

/// `size` row indices (ascending) drawn without replacement so each class keeps
/// its share, rounded to the nearest count. Returns every row when size >= n.
[[nodiscard]] std::vector<std::size_t> stratified_subsample(std::span<const std::uint8_t> labels, std::size_t size,
                                                            std::uint64_t seed);

struct CvSpec {
    std::size_t folds = 10;
    std::size_t repeats = 3;
    std::uint64_t seed = 1;
    /// When a resampler is active the learner trains with unit class weights unless this is set.
    bool keep_weights_with_resampling = false;
};

struct FoldRecord {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    ConfusionCounts counts;
    MetricReport metrics;
    std::size_t train_rows = 0;       ///< after resampling
    std::size_t synthetic_rows = 0;
    bool resampler_flagged = false;
    /// Dataset row indices that seeded each synthetic row (neighbor too, for interpolants).
    std::vector<std::size_t> synthetic_sources;
};

struct MetricSummary {
    std::optional<double> mean;
    std::optional<double> stddev;  ///< sample standard deviation; nullopt with fewer than 2 values
    std::size_t used = 0;
    std::size_t skipped = 0;       ///< folds where the metric was undefined
};

struct CvReport {
    CvSpec cv;
    CostModelSpec model;
    std::optional<ResampleSpec> resampler;
    std::vector<FoldRecord> folds;  ///< ordered by (repeat, fold)

    [[nodiscard]] MetricSummary summary(Metric m) const;
    [[nodiscard]] std::vector<std::optional<double>> values(Metric m) const;
};

/**
 * Repeated stratified k-fold evaluation. Resampling, when requested, touches the
 * training part of each fold only. Training failures are rethrown with the
 * (repeat, fold) they occurred in.
 */
[[nodiscard]] CvReport cross_validate(const CostModelSpec& model, const std::optional<ResampleSpec>& resampler,
                                      const FeatureMatrix& x, std::span<const std::uint8_t> y, const CvSpec& cv);

/// `repeat,fold,metric,value` per fold and metric, then mean/std/skipped rows per metric.
/// `label` (when non-empty) is prepended as a `model` column.
void write_cv_csv(std::ostream& out, const CvReport& report, std::string_view label = {});
void write_cv_rows(std::ostream& out, const CvReport& report, std::string_view label);

/// Formats an optional metric as shortest round-trip decimal or `NA`.
[[nodiscard]] std::string format_metric(std::optional<double> v);

}  // namespace tsad
