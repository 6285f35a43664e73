#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsad/confusion.hpp"
#include "tsad/matrix.hpp"

namespace tsad {

enum class Learner { Logistic, LinearSvm, Forest };

[[nodiscard]] std::string_view learner_name(Learner learner);
[[nodiscard]] std::optional<Learner> learner_from_name(std::string_view name);

/// Misclassification costs. c_fn is C(0,1) (predicted negative, actually
/// positive); c_fp is C(1,0).
struct CostMatrix {
    double c_fn = 1.0;
    double c_fp = 1.0;
    double c_tp = 0.0;
    double c_tn = 0.0;
};

struct ClassWeights {
    double negative = 1.0;
    double positive = 1.0;

    [[nodiscard]] double of(std::uint8_t label) const noexcept { return label ? positive : negative; }
    friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

/// Resolve to n / (2 * n_c) from the training labels at fit time.
struct BalancedWeights {
    friend bool operator==(const BalancedWeights&, const BalancedWeights&) = default;
};

using WeightSpec = std::variant<BalancedWeights, ClassWeights>;

/// n / (2 * n_c) per class. Throws DegenerateLabelsError unless both classes occur.
[[nodiscard]] ClassWeights balanced_weights(std::span<const std::uint8_t> labels);

/// Weights with w_pos / w_neg = c_fn / c_fp and w_neg = 1.
[[nodiscard]] ClassWeights weights_from_costs(const CostMatrix& costs);

[[nodiscard]] ClassWeights resolve_weights(const WeightSpec& spec, std::span<const std::uint8_t> labels);

[[nodiscard]] double total_cost(const ConfusionCounts& counts, const CostMatrix& costs);

struct LogisticParams {
    double lambda = 1e-4;
    std::size_t max_epochs = 1000;
    double gradient_tolerance = 1e-6;
};

struct SvmParams {
    std::size_t iterations = 1000;
    double lambda = 1e-4;
    double t0 = 1.0;
};

struct ForestParams {
    std::size_t n_trees = 1000;
    std::optional<std::size_t> max_features;  ///< floor(sqrt(d)) when unset
    std::size_t threads = 0;                  ///< 0 = hardware concurrency
};

struct CostModelSpec {
    Learner learner = Learner::Forest;
    WeightSpec weights = BalancedWeights{};
    LogisticParams logistic;
    SvmParams svm;
    ForestParams forest;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on out-of-range parameters.
    void validate() const;
};

/// z-score parameters fitted on the training matrix. Zero-variance columns keep scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    [[nodiscard]] static Standardizer fit(const FeatureMatrix& x);
    [[nodiscard]] FeatureMatrix apply(const FeatureMatrix& x) const;
    void apply(std::span<const double> row, std::span<double> out) const;
};

/// Linear decision function over standardized inputs.
struct LinearModel {
    Standardizer standardizer;
    std::vector<double> coefficients;
    double intercept = 0.0;

    /// w . z(x) + b, where z is the fitted standardization.
    [[nodiscard]] double decision(std::span<const double> row) const;
};

struct TreeNode {
    static constexpr std::int32_t kLeaf = -1;

    std::int32_t feature = kLeaf;
    double threshold = 0.0;  ///< go left when x[feature] <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double positive_fraction = 0.0;  ///< class-weighted share of positives in the node
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  ///< nodes[0] is the root

    [[nodiscard]] const TreeNode& leaf_for(std::span<const double> row) const;
    /// Tie (exactly one half) goes to the negative class.
    [[nodiscard]] bool predict(std::span<const double> row) const { return leaf_for(row).positive_fraction > 0.5; }
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<double> importances;  ///< mean impurity decrease, sums to 1 unless no tree split

    [[nodiscard]] std::size_t positive_votes(std::span<const double> row) const;
    [[nodiscard]] bool predict(std::span<const double> row) const;
};

struct TrainingInfo {
    std::size_t iterations = 0;
    double gradient_norm = 0.0;  ///< final infinity norm (logistic only)
    bool converged = false;
};

/**
 * A fitted classifier. Immutable, so one instance can serve any number of
 * threads. Predictions are a pure function of the model and the input row.
 */
class TrainedClassifier {
public:
    using Model = std::variant<LinearModel, ForestModel>;

    TrainedClassifier(Learner learner, Model model, std::size_t width, ClassWeights weights, std::uint64_t seed,
                      std::vector<std::string> feature_names = {}, TrainingInfo info = {});

    [[nodiscard]] Learner learner() const noexcept { return learner_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] const ClassWeights& weights() const noexcept { return weights_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    [[nodiscard]] const TrainingInfo& training_info() const noexcept { return info_; }
    [[nodiscard]] const Model& model() const noexcept { return model_; }

    [[nodiscard]] const LinearModel* linear() const noexcept { return std::get_if<LinearModel>(&model_); }
    [[nodiscard]] const ForestModel* forest() const noexcept { return std::get_if<ForestModel>(&model_); }

    [[nodiscard]] bool predict_row(std::span<const double> row) const;
    /// Throws std::invalid_argument when the matrix width differs from the model's.
    [[nodiscard]] Labels predict(const FeatureMatrix& x) const;

    /// Per-feature importance: mean impurity decrease for forests, |coefficient|
    /// on standardized inputs for linear learners.
    [[nodiscard]] std::vector<double> importances() const;

private:
    Learner learner_;
    Model model_;
    std::size_t width_;
    ClassWeights weights_;
    std::uint64_t seed_;
    std::vector<std::string> feature_names_;
    TrainingInfo info_;
};

/// Class-weighted negative log-likelihood plus lambda * |w|^2 / 2, minimized by L-BFGS.
[[nodiscard]] TrainedClassifier train_logistic(const CostModelSpec& spec, const FeatureMatrix& x,
                                               std::span<const std::uint8_t> y,
                                               std::vector<std::string> feature_names = {});

/// Full-batch subgradient descent on the class-weighted hinge loss, exactly
/// `spec.svm.iterations` steps with step size 1 / (lambda * (t + t0)).
[[nodiscard]] TrainedClassifier train_linear_svm(const CostModelSpec& spec, const FeatureMatrix& x,
                                                 std::span<const std::uint8_t> y,
                                                 std::vector<std::string> feature_names = {});

/// Bootstrap ensemble of fully grown, class-weighted Gini trees.
[[nodiscard]] TrainedClassifier train_forest(const CostModelSpec& spec, const FeatureMatrix& x,
                                             std::span<const std::uint8_t> y,
                                             std::vector<std::string> feature_names = {});

/// Dispatches on spec.learner.
[[nodiscard]] TrainedClassifier train(const CostModelSpec& spec, const FeatureMatrix& x,
                                      std::span<const std::uint8_t> y, std::vector<std::string> feature_names = {});

[[nodiscard]] inline Labels predict(const TrainedClassifier& model, const FeatureMatrix& x) {
    return model.predict(x);
}

// Persistence. The document carries a format tag and version; load rejects any
// other version.
inline constexpr int kModelFormatVersion = 1;

[[nodiscard]] nlohmann::json model_to_json(const TrainedClassifier& model);
[[nodiscard]] TrainedClassifier model_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const TrainedClassifier& model);
[[nodiscard]] TrainedClassifier load_model(const std::filesystem::path& path);

}  // namespace tsad
