#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "training_checks.hpp"
#include "tsad/cost_models.hpp"

namespace tsad {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// theta = [w_0 .. w_{d-1}, b]; objective (1/n) sum c_i (softplus(z_i) - y_i z_i) + lambda |w|^2 / 2.
class WeightedLogLoss {
public:
    WeightedLogLoss(const FeatureMatrix& z, std::span<const std::uint8_t> y, ClassWeights weights, double lambda)
        : z_(z), y_(y), weights_(weights), lambda_(lambda) {}

    double evaluate(const std::vector<double>& theta, std::vector<double>& grad) const {
        const auto d = z_.cols();
        const auto n = static_cast<double>(z_.rows());
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < z_.rows(); ++i) {
            const auto row = z_.row(i);
            double margin = theta[d];
            for (std::size_t c = 0; c < d; ++c) {
                margin += theta[c] * row[c];
            }
            const double w = weights_.of(y_[i]);
            const double target = y_[i] ? 1.0 : 0.0;
            loss += w * (softplus(margin) - target * margin);
            const double residual = w * (sigmoid(margin) - target);
            for (std::size_t c = 0; c < d; ++c) {
                grad[c] += residual * row[c];
            }
            grad[d] += residual;
        }
        loss /= n;
        for (auto& g : grad) {
            g /= n;
        }
        for (std::size_t c = 0; c < d; ++c) {
            loss += 0.5 * lambda_ * theta[c] * theta[c];
            grad[c] += lambda_ * theta[c];
        }
        return loss;
    }

private:
    const FeatureMatrix& z_;
    std::span<const std::uint8_t> y_;
    ClassWeights weights_;
    double lambda_;
};

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

TrainedClassifier train_logistic(const CostModelSpec& spec, const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                 std::vector<std::string> feature_names) {
    spec.validate();
    detail::check_training_inputs(x, y, true);
    const auto weights = resolve_weights(spec.weights, y);
    const auto standardizer = Standardizer::fit(x);
    const auto z = standardizer.apply(x);
    const WeightedLogLoss objective(z, y, weights, spec.logistic.lambda);

    const auto dim = x.cols() + 1;
    std::vector<double> theta(dim, 0.0);
    std::vector<double> grad(dim);
    double loss = objective.evaluate(theta, grad);

    // Limited-memory BFGS with Armijo backtracking.
    constexpr std::size_t kMemory = 10;
    std::deque<std::vector<double>> s_hist;
    std::deque<std::vector<double>> y_hist;
    std::deque<double> rho_hist;
    std::vector<double> direction(dim);
    std::vector<double> candidate(dim);
    std::vector<double> candidate_grad(dim);
    std::vector<double> alpha(kMemory);

    TrainingInfo info;
    info.gradient_norm = inf_norm(grad);
    std::size_t epoch = 0;
    while (info.gradient_norm >= spec.logistic.gradient_tolerance && epoch < spec.logistic.max_epochs) {
        ++epoch;
        direction = grad;
        const auto m = s_hist.size();
        for (std::size_t k = m; k-- > 0;) {
            alpha[k] = rho_hist[k] * dot(s_hist[k], direction);
            for (std::size_t j = 0; j < dim; ++j) {
                direction[j] -= alpha[k] * y_hist[k][j];
            }
        }
        double gamma = 1.0;
        if (m > 0) {
            gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
        } else {
            gamma = 1.0 / std::max(1.0, inf_norm(grad));
        }
        for (auto& v : direction) {
            v *= gamma;
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho_hist[k] * dot(y_hist[k], direction);
            for (std::size_t j = 0; j < dim; ++j) {
                direction[j] += s_hist[k][j] * (alpha[k] - beta);
            }
        }
        for (auto& v : direction) {
            v = -v;
        }
        double slope = dot(grad, direction);
        if (!(slope < 0.0)) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t j = 0; j < dim; ++j) {
                direction[j] = -grad[j];
            }
            slope = dot(grad, direction);
        }

        double step = 1.0;
        double candidate_loss = 0.0;
        bool accepted = false;
        for (int tries = 0; tries < 60; ++tries) {
            for (std::size_t j = 0; j < dim; ++j) {
                candidate[j] = theta[j] + step * direction[j];
            }
            candidate_loss = objective.evaluate(candidate, candidate_grad);
            if (candidate_loss <= loss + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }

        std::vector<double> s(dim);
        std::vector<double> yk(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            s[j] = candidate[j] - theta[j];
            yk[j] = candidate_grad[j] - grad[j];
        }
        const double sy = dot(s, yk);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(yk, yk))) {
            if (s_hist.size() == kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yk));
            rho_hist.push_back(1.0 / sy);
        }
        theta.swap(candidate);
        grad.swap(candidate_grad);
        loss = candidate_loss;
        info.gradient_norm = inf_norm(grad);
    }
    info.iterations = epoch;
    info.converged = info.gradient_norm < spec.logistic.gradient_tolerance;

    LinearModel model;
    model.standardizer = standardizer;
    model.coefficients.assign(theta.begin(), theta.end() - 1);
    model.intercept = theta.back();
    return TrainedClassifier(Learner::Logistic, std::move(model), x.cols(), weights, spec.seed,
                             std::move(feature_names), info);
}

}  // namespace tsad
