#include <algorithm>
#include <cmath>

#include "training_checks.hpp"
#include "tsad/cost_models.hpp"

namespace tsad {

TrainedClassifier train_linear_svm(const CostModelSpec& spec, const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                   std::vector<std::string> feature_names) {
    spec.validate();
    detail::check_training_inputs(x, y, true);
    const auto weights = resolve_weights(spec.weights, y);
    const auto standardizer = Standardizer::fit(x);
    const auto z = standardizer.apply(x);
    const auto d = x.cols();
    const auto n = static_cast<double>(x.rows());
    const double lambda = spec.svm.lambda;

    std::vector<double> w(d, 0.0);
    double b = 0.0;
    std::vector<double> hinge_grad(d);
    for (std::size_t t = 0; t < spec.svm.iterations; ++t) {
        std::fill(hinge_grad.begin(), hinge_grad.end(), 0.0);
        double bias_grad = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) {
            const auto row = z.row(i);
            const double sign = y[i] ? 1.0 : -1.0;
            double f = b;
            for (std::size_t c = 0; c < d; ++c) {
                f += w[c] * row[c];
            }
            if (sign * f < 1.0) {
                const double coeff = weights.of(y[i]) * sign;
                for (std::size_t c = 0; c < d; ++c) {
                    hinge_grad[c] -= coeff * row[c];
                }
                bias_grad -= coeff;
            }
        }
        const double eta = 1.0 / (lambda * (static_cast<double>(t) + spec.svm.t0));
        for (std::size_t c = 0; c < d; ++c) {
            w[c] -= eta * (lambda * w[c] + hinge_grad[c] / n);
        }
        b -= eta * bias_grad / n;
    }

    LinearModel model;
    model.standardizer = standardizer;
    model.coefficients = std::move(w);
    model.intercept = b;
    TrainingInfo info;
    info.iterations = spec.svm.iterations;
    return TrainedClassifier(Learner::LinearSvm, std::move(model), x.cols(), weights, spec.seed,
                             std::move(feature_names), info);
}

}  // namespace tsad
