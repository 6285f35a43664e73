#include "tsad/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace tsad {

std::vector<std::uint32_t> equal_frequency_bins(std::span<const double> values, std::size_t bins) {
    if (bins == 0) {
        throw std::invalid_argument("equal_frequency_bins: bins must be >= 1");
    }
    const auto n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::uint32_t> codes(n);
    for (std::size_t r = 0; r < n; ++r) {
        codes[order[r]] = static_cast<std::uint32_t>(r * bins / n);
    }
    return codes;
}

double mutual_information(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("mutual_information: length mismatch");
    }
    const auto n = a.size();
    if (n == 0) {
        return 0.0;
    }
    const std::size_t rows = *std::max_element(a.begin(), a.end()) + 1;
    const std::size_t cols = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<std::size_t> joint(rows * cols, 0);
    std::vector<std::size_t> row_count(rows, 0);
    std::vector<std::size_t> col_count(cols, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[a[i] * cols + b[i]];
        ++row_count[a[i]];
        ++col_count[b[i]];
    }
    const auto total = static_cast<double>(n);
    double mi = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const auto count = joint[r * cols + c];
            if (count == 0) {
                continue;
            }
            const auto nxy = static_cast<double>(count);
            mi += nxy / total *
                  std::log(nxy * total / (static_cast<double>(row_count[r]) * static_cast<double>(col_count[c])));
        }
    }
    return std::max(0.0, mi);
}

double mutual_information(std::span<const double> feature, std::span<const std::uint8_t> labels, std::size_t bins) {
    if (feature.size() != labels.size()) {
        throw std::invalid_argument("mutual_information: feature has " + std::to_string(feature.size()) +
                                    " rows but labels " + std::to_string(labels.size()));
    }
    if (feature.empty() || std::all_of(feature.begin(), feature.end(), [&](double v) { return v == feature[0]; })) {
        return 0.0;
    }
    const auto codes = equal_frequency_bins(feature, bins);
    const std::vector<std::uint32_t> label_codes(labels.begin(), labels.end());
    return mutual_information(codes, label_codes);
}

std::vector<FeatureScore> mutual_information_scores(const TimeSeriesFrame& features,
                                                    std::span<const std::uint8_t> labels) {
    if (labels.size() != features.rows()) {
        throw std::invalid_argument("mutual_information_scores: frame has " + std::to_string(features.rows()) +
                                    " rows but labels " + std::to_string(labels.size()));
    }
    if (features.missing_count() != 0) {
        throw std::invalid_argument("mutual_information_scores: frame has missing cells");
    }
    std::vector<FeatureScore> scores;
    for (std::size_t c = 0; c < features.channels().size(); ++c) {
        scores.push_back({features.channels()[c], mutual_information(features.channel_at(c), labels)});
    }
    std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    return scores;
}

std::vector<FeatureScore> mutual_information_scores(const DifferencedFrame& features,
                                                    std::span<const std::uint8_t> labels) {
    return mutual_information_scores(features.deltas, labels);
}

void write_scores_csv(std::ostream& out, std::span<const FeatureScore> scores) {
    out << "channel,score\n";
    for (const auto& s : scores) {
        out << channel_name(s.channel) << ',' << format_metric(s.score) << '\n';
    }
}

RfeResult rfe(const CostModelSpec& model, const FeatureMatrix& x, std::span<const std::uint8_t> y,
              const RfeOptions& options) {
    const auto d = x.cols();
    if (options.target_k && (*options.target_k < 1 || *options.target_k > d)) {
        throw std::invalid_argument("rfe: target_k must lie in [1, " + std::to_string(d) + "]");
    }
    if (d == 0) {
        throw std::invalid_argument("rfe: no features");
    }
    const bool scan = !options.target_k;
    const std::size_t stop_at = scan ? 1 : *options.target_k;

    RfeResult result;
    result.rank.assign(d, 0);
    std::vector<std::size_t> remaining(d);
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});
    std::vector<std::vector<std::size_t>> survivors_by_k(d + 1);

    std::vector<double> final_importance;
    while (true) {
        survivors_by_k[remaining.size()] = remaining;
        const auto fitted = train(model, x.select_columns(remaining), y);
        const auto importance = fitted.importances();
        if (remaining.size() == stop_at) {
            final_importance = importance;
            break;
        }
        std::size_t weakest = 0;
        for (std::size_t i = 1; i < importance.size(); ++i) {
            if (importance[i] < importance[weakest]) {
                weakest = i;
            }
        }
        result.elimination_order.push_back(remaining[weakest]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(weakest));
    }

    if (scan) {
        double best_mean = -1.0;
        std::size_t best_k = d;
        for (std::size_t k = 1; k <= d; ++k) {
            const auto& columns = survivors_by_k[k];
            const auto report = cross_validate(model, std::nullopt, x.select_columns(columns), y, options.cv);
            result.per_k_scores[k] = report.values(Metric::F1);
            const auto mean = report.summary(Metric::F1).mean.value_or(0.0);
            // Strictly better only, so the smallest k wins ties.
            if (mean > best_mean) {
                best_mean = mean;
                best_k = k;
            }
        }
        result.selected = survivors_by_k[best_k];
    } else {
        result.selected = remaining;
    }
    std::sort(result.selected.begin(), result.selected.end());

    // Survivors of the final round: ranked by their importance in that round.
    std::vector<std::size_t> order(remaining.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return final_importance[a] > final_importance[b]; });
    std::size_t next_rank = 1;
    for (auto i : order) {
        result.rank[remaining[i]] = next_rank++;
    }
    for (auto it = result.elimination_order.rbegin(); it != result.elimination_order.rend(); ++it) {
        result.rank[*it] = next_rank++;
    }
    return result;
}

RfeRanking rfe(const CostModelSpec& model, const DifferencedFrame& features, std::span<const std::uint8_t> labels,
               const RfeOptions& options) {
    const auto& frame = features.deltas;
    if (labels.size() != frame.rows()) {
        throw std::invalid_argument("rfe: label count differs from frame rows");
    }
    const auto raw = rfe(model, frame.to_matrix(), labels, options);
    RfeRanking out;
    const auto& ch = frame.channels();
    for (std::size_t c = 0; c < ch.size(); ++c) {
        out.ranking[ch[c]] = raw.rank[c];
    }
    for (auto c : raw.selected) {
        out.selected.push_back(ch[c]);
    }
    for (auto c : raw.elimination_order) {
        out.elimination_order.push_back(ch[c]);
    }
    out.per_k_scores = raw.per_k_scores;
    return out;
}

void write_ranking_csv(std::ostream& out, const RfeRanking& ranking) {
    out << "channel,rank,selected\n";
    for (const auto& [channel, rank] : ranking.ranking) {
        const bool selected =
            std::find(ranking.selected.begin(), ranking.selected.end(), channel) != ranking.selected.end();
        out << channel_name(channel) << ',' << rank << ',' << (selected ? "true" : "false") << '\n';
    }
}

void write_rfe_scan_csv(std::ostream& out, const RfeRanking& ranking) {
    out << "k,fold,f1\n";
    for (const auto& [k, scores] : ranking.per_k_scores) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            out << k << ',' << i << ',' << format_metric(scores[i]) << '\n';
        }
    }
}

}  // namespace tsad
