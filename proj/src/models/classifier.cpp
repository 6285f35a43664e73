#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "training_checks.hpp"
#include "tsad/cost_models.hpp"
#include "tsad/error.hpp"

namespace tsad {

std::string_view learner_name(Learner learner) {
    switch (learner) {
        case Learner::Logistic: return "logistic";
        case Learner::LinearSvm: return "linear_svm";
        case Learner::Forest: return "forest";
    }
    return "?";
}

std::optional<Learner> learner_from_name(std::string_view name) {
    if (name == "logistic" || name == "lr") {
        return Learner::Logistic;
    }
    if (name == "linear_svm" || name == "svm") {
        return Learner::LinearSvm;
    }
    if (name == "forest" || name == "rf") {
        return Learner::Forest;
    }
    return std::nullopt;
}

ClassWeights balanced_weights(std::span<const std::uint8_t> labels) {
    const auto n = labels.size();
    const auto n_pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
    const auto n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw DegenerateLabelsError("balanced_weights: both classes must be present");
    }
    const auto total = static_cast<double>(n);
    return {total / (2.0 * static_cast<double>(n_neg)), total / (2.0 * static_cast<double>(n_pos))};
}

ClassWeights weights_from_costs(const CostMatrix& costs) {
    if (!(costs.c_fn >= 0.0) || !(costs.c_fp > 0.0)) {
        throw std::invalid_argument("weights_from_costs: need c_fn >= 0 and c_fp > 0");
    }
    if (costs.c_fn == 0.0) {
        throw std::invalid_argument("weights_from_costs: c_fn = 0 gives a zero positive weight");
    }
    return {1.0, costs.c_fn / costs.c_fp};
}

ClassWeights resolve_weights(const WeightSpec& spec, std::span<const std::uint8_t> labels) {
    if (const auto* fixed = std::get_if<ClassWeights>(&spec)) {
        if (!(fixed->negative > 0.0) || !(fixed->positive > 0.0)) {
            throw std::invalid_argument("class weights must be positive");
        }
        return *fixed;
    }
    return balanced_weights(labels);
}

double total_cost(const ConfusionCounts& counts, const CostMatrix& costs) {
    double total = costs.c_fn * static_cast<double>(counts.fn) + costs.c_fp * static_cast<double>(counts.fp);
    if (costs.c_tp != 0.0) {
        total += costs.c_tp * static_cast<double>(counts.tp);
    }
    if (costs.c_tn != 0.0) {
        total += costs.c_tn * static_cast<double>(counts.tn);
    }
    return total;
}

void CostModelSpec::validate() const {
    if (forest.n_trees < 1) {
        throw std::invalid_argument("forest.n_trees must be >= 1");
    }
    if (forest.max_features && *forest.max_features < 1) {
        throw std::invalid_argument("forest.max_features must be >= 1");
    }
    if (!(svm.lambda > 0.0)) {
        // The step size 1 / (lambda (t + t0)) is undefined at lambda = 0.
        throw std::invalid_argument("svm.lambda must be > 0");
    }
    if (!(svm.t0 > 0.0)) {
        throw std::invalid_argument("svm.t0 must be > 0");
    }
    if (!(logistic.lambda >= 0.0)) {
        throw std::invalid_argument("logistic.lambda must be >= 0");
    }
    if (!(logistic.gradient_tolerance > 0.0)) {
        throw std::invalid_argument("logistic.gradient_tolerance must be > 0");
    }
    if (const auto* fixed = std::get_if<ClassWeights>(&weights)) {
        if (!(fixed->negative > 0.0) || !(fixed->positive > 0.0)) {
            throw std::invalid_argument("class weights must be positive");
        }
    }
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
    Standardizer s;
    const auto d = x.cols();
    const auto n = static_cast<double>(x.rows());
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    if (x.rows() == 0) {
        return s;
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            s.mean[c] += x(r, c);
        }
    }
    for (auto& m : s.mean) {
        m /= n;
    }
    std::vector<double> var(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = x(r, c) - s.mean[c];
            var[c] += dev * dev;
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        const double sd = std::sqrt(var[c] / n);
        s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

void Standardizer::apply(std::span<const double> row, std::span<double> out) const {
    for (std::size_t c = 0; c < row.size(); ++c) {
        out[c] = (row[c] - mean[c]) / scale[c];
    }
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
    FeatureMatrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        apply(x.row(r), out.row(r));
    }
    return out;
}

double LinearModel::decision(std::span<const double> row) const {
    double z = intercept;
    for (std::size_t c = 0; c < row.size(); ++c) {
        z += coefficients[c] * ((row[c] - standardizer.mean[c]) / standardizer.scale[c]);
    }
    return z;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
    const TreeNode* node = &nodes.front();
    while (node->feature != TreeNode::kLeaf) {
        node = &nodes[row[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
    }
    return *node;
}

std::size_t ForestModel::positive_votes(std::span<const double> row) const {
    std::size_t votes = 0;
    for (const auto& tree : trees) {
        votes += tree.predict(row) ? 1 : 0;
    }
    return votes;
}

bool ForestModel::predict(std::span<const double> row) const {
    return 2 * positive_votes(row) > trees.size();
}

TrainedClassifier::TrainedClassifier(Learner learner, Model model, std::size_t width, ClassWeights weights,
                                     std::uint64_t seed, std::vector<std::string> feature_names, TrainingInfo info)
    : learner_(learner),
      model_(std::move(model)),
      width_(width),
      weights_(weights),
      seed_(seed),
      feature_names_(std::move(feature_names)),
      info_(info) {
    if (!feature_names_.empty() && feature_names_.size() != width_) {
        throw std::invalid_argument("TrainedClassifier: feature name count differs from width");
    }
    if ((learner_ == Learner::Forest) != std::holds_alternative<ForestModel>(model_)) {
        throw std::invalid_argument("TrainedClassifier: learner kind does not match model");
    }
}

bool TrainedClassifier::predict_row(std::span<const double> row) const {
    if (row.size() != width_) {
        throw std::invalid_argument("predict: row width " + std::to_string(row.size()) + " but model expects " +
                                    std::to_string(width_));
    }
    if (const auto* lin = linear()) {
        // Exactly on the boundary counts as negative.
        return lin->decision(row) > 0.0;
    }
    return std::get<ForestModel>(model_).predict(row);
}

Labels TrainedClassifier::predict(const FeatureMatrix& x) const {
    if (x.rows() == 0) {
        return {};
    }
    if (x.cols() != width_) {
        throw std::invalid_argument("predict: matrix width " + std::to_string(x.cols()) + " but model expects " +
                                    std::to_string(width_));
    }
    Labels out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out[r] = predict_row(x.row(r)) ? 1 : 0;
    }
    return out;
}

std::vector<double> TrainedClassifier::importances() const {
    if (const auto* lin = linear()) {
        std::vector<double> out(lin->coefficients.size());
        std::transform(lin->coefficients.begin(), lin->coefficients.end(), out.begin(),
                       [](double c) { return std::abs(c); });
        return out;
    }
    return std::get<ForestModel>(model_).importances;
}

TrainedClassifier train(const CostModelSpec& spec, const FeatureMatrix& x, std::span<const std::uint8_t> y,
                        std::vector<std::string> feature_names) {
    switch (spec.learner) {
        case Learner::Logistic: return train_logistic(spec, x, y, std::move(feature_names));
        case Learner::LinearSvm: return train_linear_svm(spec, x, y, std::move(feature_names));
        case Learner::Forest: return train_forest(spec, x, y, std::move(feature_names));
    }
    throw std::invalid_argument("unknown learner");
}

}  // namespace tsad
