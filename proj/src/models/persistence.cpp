#include <fstream>

#include "tsad/cost_models.hpp"
#include "tsad/error.hpp"

namespace tsad {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "tsad-model";

json linear_to_json(const LinearModel& m) {
    return {{"mean", m.standardizer.mean},
            {"scale", m.standardizer.scale},
            {"coefficients", m.coefficients},
            {"intercept", m.intercept}};
}

LinearModel linear_from_json(const json& j, std::size_t width) {
    LinearModel m;
    m.standardizer.mean = j.at("mean").get<std::vector<double>>();
    m.standardizer.scale = j.at("scale").get<std::vector<double>>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    if (m.standardizer.mean.size() != width || m.standardizer.scale.size() != width ||
        m.coefficients.size() != width) {
        throw InputError("model document: linear parameter length differs from width");
    }
    return m;
}

// Trees are stored column-wise to keep large forests compact.
json tree_to_json(const DecisionTree& tree) {
    std::vector<std::int32_t> feature;
    std::vector<double> threshold;
    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    std::vector<double> value;
    for (const auto& node : tree.nodes) {
        feature.push_back(node.feature);
        threshold.push_back(node.threshold);
        left.push_back(node.left);
        right.push_back(node.right);
        value.push_back(node.positive_fraction);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

DecisionTree tree_from_json(const json& j, std::size_t width) {
    const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<std::uint32_t>>();
    const auto right = j.at("right").get<std::vector<std::uint32_t>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const auto n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n) {
        throw InputError("model document: inconsistent tree arrays");
    }
    DecisionTree tree;
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = tree.nodes[i];
        node = {feature[i], threshold[i], left[i], right[i], value[i]};
        if (node.feature != TreeNode::kLeaf &&
            (node.feature < 0 || static_cast<std::size_t>(node.feature) >= width || node.left <= i ||
             node.right <= i || node.left >= n || node.right >= n)) {
            throw InputError("model document: malformed tree node " + std::to_string(i));
        }
    }
    return tree;
}

}  // namespace

json model_to_json(const TrainedClassifier& model) {
    json doc = {{"format", kFormatTag},
                {"version", kModelFormatVersion},
                {"learner", std::string(learner_name(model.learner()))},
                {"seed", model.seed()},
                {"width", model.width()},
                {"feature_names", model.feature_names()},
                {"weights", {{"negative", model.weights().negative}, {"positive", model.weights().positive}}},
                {"training", {{"iterations", model.training_info().iterations},
                              {"gradient_norm", model.training_info().gradient_norm},
                              {"converged", model.training_info().converged}}}};
    if (const auto* lin = model.linear()) {
        doc["linear"] = linear_to_json(*lin);
    } else {
        const auto& forest = *model.forest();
        json trees = json::array();
        for (const auto& tree : forest.trees) {
            trees.push_back(tree_to_json(tree));
        }
        doc["forest"] = {{"importances", forest.importances}, {"trees", std::move(trees)}};
    }
    return doc;
}

TrainedClassifier model_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != kFormatTag) {
            throw InputError("model document: unknown format tag");
        }
        const auto version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw InputError("model document: unsupported version " + std::to_string(version));
        }
        const auto learner = learner_from_name(doc.at("learner").get<std::string>());
        if (!learner) {
            throw InputError("model document: unknown learner");
        }
        const auto width = doc.at("width").get<std::size_t>();
        ClassWeights weights{doc.at("weights").at("negative").get<double>(),
                             doc.at("weights").at("positive").get<double>()};
        TrainingInfo info;
        info.iterations = doc.at("training").at("iterations").get<std::size_t>();
        info.gradient_norm = doc.at("training").at("gradient_norm").get<double>();
        info.converged = doc.at("training").at("converged").get<bool>();
        auto names = doc.at("feature_names").get<std::vector<std::string>>();
        const auto seed = doc.at("seed").get<std::uint64_t>();
        if (*learner == Learner::Forest) {
            ForestModel forest;
            forest.importances = doc.at("forest").at("importances").get<std::vector<double>>();
            for (const auto& t : doc.at("forest").at("trees")) {
                forest.trees.push_back(tree_from_json(t, width));
            }
            if (forest.trees.empty()) {
                throw InputError("model document: forest without trees");
            }
            return TrainedClassifier(*learner, std::move(forest), width, weights, seed, std::move(names), info);
        }
        return TrainedClassifier(*learner, linear_from_json(doc.at("linear"), width), width, weights, seed,
                                 std::move(names), info);
    } catch (const json::exception& e) {
        throw InputError(std::string("model document: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const TrainedClassifier& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << model_to_json(model).dump() << '\n';
}

TrainedClassifier load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw InputError("model file " + path.string() + ": " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace tsad
