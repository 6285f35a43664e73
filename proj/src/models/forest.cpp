#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "training_checks.hpp"
#include "tsad/cost_models.hpp"
#include "tsad/random.hpp"

namespace tsad {

namespace {

struct SplitCandidate {
    std::int32_t feature = TreeNode::kLeaf;
    double threshold = 0.0;
    double score = -1.0;  // sum over children of (W0^2 + W1^2) / W
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& x, std::span<const std::uint8_t> y, ClassWeights weights,
                std::size_t max_features, Rng rng)
        : x_(x), y_(y), weights_(weights), max_features_(max_features), rng_(std::move(rng)),
          importance_(x.cols(), 0.0) {}

    DecisionTree build() {
        const auto n = x_.rows();
        std::vector<std::uint32_t> sample(n);
        for (auto& s : sample) {
            s = static_cast<std::uint32_t>(uniform_index(rng_, n));
        }
        DecisionTree tree;
        struct Pending {
            std::uint32_t node;
            std::size_t begin;
            std::size_t end;
        };
        tree.nodes.emplace_back();
        std::vector<Pending> stack{{0, 0, n}};
        features_.resize(x_.cols());
        while (!stack.empty()) {
            const auto job = stack.back();
            stack.pop_back();
            auto [w_neg, w_pos] = class_mass(sample, job.begin, job.end);
            const double mass = w_neg + w_pos;
            tree.nodes[job.node].positive_fraction = w_pos / mass;
            if (w_neg == 0.0 || w_pos == 0.0 || job.end - job.begin < 2) {
                continue;
            }
            const auto split = best_split(sample, job.begin, job.end, w_neg, w_pos);
            if (split.feature == TreeNode::kLeaf) {
                continue;
            }
            const auto f = static_cast<std::size_t>(split.feature);
            const auto mid = std::partition(sample.begin() + static_cast<std::ptrdiff_t>(job.begin),
                                            sample.begin() + static_cast<std::ptrdiff_t>(job.end),
                                            [&](std::uint32_t s) { return x_(s, f) <= split.threshold; });
            const auto mid_index = static_cast<std::size_t>(mid - sample.begin());
            // Weighted Gini decrease: W * G(node) - sum W_child * G(child) = score - (W0^2 + W1^2) / W.
            importance_[f] += split.score - (w_neg * w_neg + w_pos * w_pos) / mass;

            const auto left = static_cast<std::uint32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& node = tree.nodes[job.node];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.left = left;
            node.right = left + 1;
            stack.push_back({left + 1, mid_index, job.end});
            stack.push_back({left, job.begin, mid_index});
        }
        return tree;
    }

    [[nodiscard]] const std::vector<double>& importance() const { return importance_; }

private:
    std::pair<double, double> class_mass(const std::vector<std::uint32_t>& sample, std::size_t begin,
                                         std::size_t end) const {
        std::size_t pos = 0;
        for (std::size_t i = begin; i < end; ++i) {
            pos += y_[sample[i]];
        }
        const auto neg = end - begin - pos;
        return {weights_.negative * static_cast<double>(neg), weights_.positive * static_cast<double>(pos)};
    }

    SplitCandidate best_split(const std::vector<std::uint32_t>& sample, std::size_t begin, std::size_t end,
                              double w_neg, double w_pos) {
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        SplitCandidate best;
        std::size_t informative = 0;
        // Draw features without replacement until max_features non-constant ones were examined.
        for (std::size_t drawn = 0; drawn < features_.size() && informative < max_features_; ++drawn) {
            const auto pick = drawn + uniform_index(rng_, features_.size() - drawn);
            std::swap(features_[drawn], features_[pick]);
            const auto f = features_[drawn];
            column_.clear();
            for (std::size_t i = begin; i < end; ++i) {
                column_.emplace_back(x_(sample[i], f), y_[sample[i]]);
            }
            std::sort(column_.begin(), column_.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (column_.front().first == column_.back().first) {
                continue;
            }
            ++informative;
            double left_neg = 0.0;
            double left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < column_.size(); ++i) {
                if (column_[i].second) {
                    left_pos += weights_.positive;
                } else {
                    left_neg += weights_.negative;
                }
                if (column_[i].first == column_[i + 1].first) {
                    continue;
                }
                const double right_neg = w_neg - left_neg;
                const double right_pos = w_pos - left_pos;
                const double left_mass = left_neg + left_pos;
                const double right_mass = right_neg + right_pos;
                const double score = (left_neg * left_neg + left_pos * left_pos) / left_mass +
                                     (right_neg * right_neg + right_pos * right_pos) / right_mass;
                if (score > best.score) {
                    best.score = score;
                    best.feature = static_cast<std::int32_t>(f);
                    double threshold = 0.5 * (column_[i].first + column_[i + 1].first);
                    if (threshold >= column_[i + 1].first) {
                        threshold = column_[i].first;
                    }
                    best.threshold = threshold;
                }
            }
        }
        return best;
    }

    const FeatureMatrix& x_;
    std::span<const std::uint8_t> y_;
    ClassWeights weights_;
    std::size_t max_features_;
    Rng rng_;
    std::vector<double> importance_;
    std::vector<std::size_t> features_;
    std::vector<std::pair<double, std::uint8_t>> column_;
};

}  // namespace

TrainedClassifier train_forest(const CostModelSpec& spec, const FeatureMatrix& x, std::span<const std::uint8_t> y,
                               std::vector<std::string> feature_names) {
    spec.validate();
    detail::check_training_inputs(x, y, false);
    // Single-class data is allowed only in the degenerate one-sample case; every
    // tree is then one leaf holding that label.
    const bool has_pos = std::any_of(y.begin(), y.end(), [](auto v) { return v != 0; });
    const bool has_neg = std::any_of(y.begin(), y.end(), [](auto v) { return v == 0; });
    ClassWeights weights;
    if (has_pos && has_neg) {
        weights = resolve_weights(spec.weights, y);
    } else if (x.rows() == 1) {
        if (const auto* fixed = std::get_if<ClassWeights>(&spec.weights)) {
            weights = *fixed;
        }
    } else {
        throw DegenerateLabelsError("train_forest: labels contain a single class");
    }

    const auto d = x.cols();
    const auto max_features = std::min(
        d, spec.forest.max_features.value_or(std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))))));
    const auto n_trees = spec.forest.n_trees;

    ForestModel forest;
    forest.trees.resize(n_trees);
    std::vector<std::vector<double>> tree_importance(n_trees);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto t = next.fetch_add(1); t < n_trees; t = next.fetch_add(1)) {
            TreeBuilder builder(x, y, weights, max_features, make_rng(spec.seed, {0x7265657446ULL, t}));
            forest.trees[t] = builder.build();
            tree_importance[t] = builder.importance();
        }
    };
    auto threads = spec.forest.threads != 0 ? spec.forest.threads : std::thread::hardware_concurrency();
    threads = std::clamp<std::size_t>(threads, 1, n_trees);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
    }

    forest.importances.assign(d, 0.0);
    for (const auto& imp : tree_importance) {
        const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
        if (total > 0.0) {
            for (std::size_t f = 0; f < d; ++f) {
                forest.importances[f] += imp[f] / total;
            }
        }
    }
    const double total = std::accumulate(forest.importances.begin(), forest.importances.end(), 0.0);
    if (total > 0.0) {
        for (auto& v : forest.importances) {
            v /= total;
        }
    }
    TrainingInfo info;
    info.iterations = n_trees;
    return TrainedClassifier(Learner::Forest, std::move(forest), d, weights, spec.seed, std::move(feature_names),
                             info);
}

}  // namespace tsad
