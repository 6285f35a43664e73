#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tsad/cost_models.hpp"
#include "tsad/dataset.hpp"
#include "tsad/evaluation.hpp"
#include "tsad/stationarity.hpp"

namespace tsad {

inline constexpr std::size_t kMutualInformationBins = 16;

/// Rank-based equal-frequency codes in [0, bins): row of rank r gets floor(r * bins / n).
/// Equal values are ordered by their original index.
[[nodiscard]] std::vector<std::uint32_t> equal_frequency_bins(std::span<const double> values,
                                                              std::size_t bins = kMutualInformationBins);

/// Plug-in mutual information of two discrete code sequences, in nats.
[[nodiscard]] double mutual_information(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// MI between a continuous feature (equal-frequency binned) and binary labels.
/// A constant feature scores 0.
[[nodiscard]] double mutual_information(std::span<const double> feature, std::span<const std::uint8_t> labels,
                                        std::size_t bins = kMutualInformationBins);

struct FeatureScore {
    ChannelId channel;
    double score = 0.0;  ///< nats
};

/// Scores every channel against `labels`, sorted by descending score (stable on ties).
[[nodiscard]] std::vector<FeatureScore> mutual_information_scores(const TimeSeriesFrame& features,
                                                                  std::span<const std::uint8_t> labels);
[[nodiscard]] std::vector<FeatureScore> mutual_information_scores(const DifferencedFrame& features,
                                                                  std::span<const std::uint8_t> labels);

void write_scores_csv(std::ostream& out, std::span<const FeatureScore> scores);

/// Column-index form of a recursive feature elimination run.
struct RfeResult {
    /// rank[c] for column c: 1 = strongest survivor. Selected columns hold 1..k by
    /// final importance; eliminated columns follow in reverse elimination order.
    std::vector<std::size_t> rank;
    std::vector<std::size_t> selected;           ///< ascending column indices
    std::vector<std::size_t> elimination_order;  ///< first eliminated first
    /// Scan mode only: CV F1 per fold for each feature count k (nullopt where F1 was undefined).
    std::map<std::size_t, std::vector<std::optional<double>>> per_k_scores;
};

struct RfeOptions {
    std::optional<std::size_t> target_k;  ///< nullopt = scan every k and keep the best mean F1
    CvSpec cv;                            ///< used in scan mode
};

/// Trains, drops the least important remaining column, repeats. Importance is
/// the learner's own (impurity decrease or |standardized coefficient|).
[[nodiscard]] RfeResult rfe(const CostModelSpec& model, const FeatureMatrix& x, std::span<const std::uint8_t> y,
                            const RfeOptions& options);

struct RfeRanking {
    std::map<ChannelId, std::size_t> ranking;
    std::vector<ChannelId> selected;
    std::vector<ChannelId> elimination_order;
    std::map<std::size_t, std::vector<std::optional<double>>> per_k_scores;
};

[[nodiscard]] RfeRanking rfe(const CostModelSpec& model, const DifferencedFrame& features,
                             std::span<const std::uint8_t> labels, const RfeOptions& options);

/// `channel,rank,selected` rows in channel order.
void write_ranking_csv(std::ostream& out, const RfeRanking& ranking);
/// `k,repeat_fold,f1` rows for the scan box plot.
void write_rfe_scan_csv(std::ostream& out, const RfeRanking& ranking);

}  // namespace tsad
