#include "tsad/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

#include "tsad/random.hpp"

namespace tsad {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string fold_tag(std::size_t repeat, std::size_t fold) {
    return "cross_validate (repeat " + std::to_string(repeat) + ", fold " + std::to_string(fold) + "): ";
}

}  // namespace

ConfusionCounts confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> actual) {
    if (predicted.size() != actual.size()) {
        throw std::invalid_argument("confusion: " + std::to_string(predicted.size()) + " predictions but " +
                                    std::to_string(actual.size()) + " labels");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] != 0;
        const bool a = actual[i] != 0;
        if (p && a) {
            ++c.tp;
        } else if (p) {
            ++c.fp;
        } else if (a) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::Sensitivity: return "sensitivity";
        case Metric::Specificity: return "specificity";
        case Metric::Precision: return "precision";
        case Metric::F1: return "f1";
        case Metric::F05: return "f05";
    }
    return "?";
}

std::optional<double> metric_value(const MetricReport& report, Metric m) {
    switch (m) {
        case Metric::Sensitivity: return report.sensitivity;
        case Metric::Specificity: return report.specificity;
        case Metric::Precision: return report.precision;
        case Metric::F1: return report.f1;
        case Metric::F05: return report.f05;
    }
    return std::nullopt;
}

std::optional<double> fbeta(const ConfusionCounts& counts, double beta) {
    if (counts.tp + counts.fp == 0 || counts.tp + counts.fn == 0) {
        return std::nullopt;
    }
    const double b2 = beta * beta;
    const double weighted_tp = (1.0 + b2) * static_cast<double>(counts.tp);
    return weighted_tp / (weighted_tp + b2 * static_cast<double>(counts.fn) + static_cast<double>(counts.fp));
}

MetricReport metrics(const ConfusionCounts& counts) {
    MetricReport r;
    r.sensitivity = ratio(counts.tp, counts.tp + counts.fn);
    r.specificity = ratio(counts.tn, counts.fp + counts.tn);
    r.precision = ratio(counts.tp, counts.tp + counts.fp);
    r.f1 = fbeta(counts, 1.0);
    r.f05 = fbeta(counts, 0.5);
    return r;
}

std::vector<FoldAssignment> repeated_stratified_kfold(std::span<const std::uint8_t> labels, std::size_t k,
                                                      std::size_t repeats, std::uint64_t seed) {
    if (k < 2) {
        throw std::invalid_argument("repeated_stratified_kfold: k must be >= 2");
    }
    if (repeats < 1) {
        throw std::invalid_argument("repeated_stratified_kfold: repeats must be >= 1");
    }
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] ? positives : negatives).push_back(i);
    }
    if (positives.size() < k || negatives.size() < k) {
        throw StratificationError("repeated_stratified_kfold: each class needs at least k = " + std::to_string(k) +
                                  " members (positives " + std::to_string(positives.size()) + ", negatives " +
                                  std::to_string(negatives.size()) + ")");
    }

    std::vector<FoldAssignment> out;
    out.reserve(k * repeats);
    std::vector<std::size_t> fold_of(labels.size());
    for (std::size_t r = 0; r < repeats; ++r) {
        auto rng = make_rng(seed, {0x4b464f4c44, r});
        auto pos = positives;
        auto neg = negatives;
        std::shuffle(pos.begin(), pos.end(), rng);
        std::shuffle(neg.begin(), neg.end(), rng);
        std::size_t dealt = 0;
        for (auto i : pos) {
            fold_of[i] = dealt++ % k;
        }
        for (auto i : neg) {
            fold_of[i] = dealt++ % k;
        }
        for (std::size_t f = 0; f < k; ++f) {
            FoldAssignment a;
            a.repeat = r;
            a.fold = f;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                (fold_of[i] == f ? a.test : a.train).push_back(i);
            }
            out.push_back(std::move(a));
        }
    }
    return out;
}

std::vector<std::size_t> stratified_subsample(std::span<const std::uint8_t> labels, std::size_t size,
                                              std::uint64_t seed) {
    const std::size_t n = labels.size();
    std::vector<std::size_t> out;
    if (size >= n) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = i;
        return out;
    }
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < n; ++i) {
        (labels[i] ? positives : negatives).push_back(i);
    }
    const auto want_pos = static_cast<std::size_t>(
        std::llround(static_cast<double>(size) * static_cast<double>(positives.size()) / static_cast<double>(n)));
    const std::size_t take_pos = std::min(want_pos, positives.size());
    const std::size_t take_neg = std::min(size - take_pos, negatives.size());

    auto rng = make_rng(seed, {0x5355425341});
    std::shuffle(positives.begin(), positives.end(), rng);
    std::shuffle(negatives.begin(), negatives.end(), rng);
    out.assign(positives.begin(), positives.begin() + static_cast<std::ptrdiff_t>(take_pos));
    out.insert(out.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(take_neg));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::optional<double>> CvReport::values(Metric m) const {
    std::vector<std::optional<double>> out;
    out.reserve(folds.size());
    for (const auto& f : folds) {
        out.push_back(metric_value(f.metrics, m));
    }
    return out;
}

MetricSummary CvReport::summary(Metric m) const {
    MetricSummary s;
    std::vector<double> defined;
    for (const auto& v : values(m)) {
        if (v) {
            defined.push_back(*v);
        } else {
            ++s.skipped;
        }
    }
    s.used = defined.size();
    if (defined.empty()) {
        return s;
    }
    double sum = 0.0;
    for (double v : defined) {
        sum += v;
    }
    const double mean = sum / static_cast<double>(defined.size());
    s.mean = mean;
    if (defined.size() >= 2) {
        double ss = 0.0;
        for (double v : defined) {
            ss += (v - mean) * (v - mean);
        }
        s.stddev = std::sqrt(ss / static_cast<double>(defined.size() - 1));
    }
    return s;
}

CvReport cross_validate(const CostModelSpec& model, const std::optional<ResampleSpec>& resampler,
                        const FeatureMatrix& x, std::span<const std::uint8_t> y, const CvSpec& cv) {
    if (x.rows() != y.size()) {
        throw std::invalid_argument("cross_validate: row/label count mismatch");
    }
    model.validate();
    if (resampler) {
        resampler->validate();
    }
    CvReport report;
    report.cv = cv;
    report.model = model;
    report.resampler = resampler;

    const auto assignments = repeated_stratified_kfold(y, cv.folds, cv.repeats, cv.seed);
    const Labels all_y(y.begin(), y.end());
    for (const auto& a : assignments) {
        FoldRecord rec;
        rec.repeat = a.repeat;
        rec.fold = a.fold;
        try {
            auto train_x = x.select_rows(a.train);
            auto train_y = select(all_y, a.train);
            auto fold_model = model;
            if (resampler) {
                auto fold_resampler = *resampler;
                fold_resampler.seed = derive_seed(resampler->seed, {a.repeat, a.fold});
                auto res = resample(train_x, train_y, fold_resampler);
                rec.synthetic_rows = res.synthetic_count();
                rec.resampler_flagged = res.empty_seed_set;
                for (const auto& p : res.provenance) {
                    rec.synthetic_sources.push_back(a.train.at(p.seed));
                    if (p.neighbor != p.seed) {
                        rec.synthetic_sources.push_back(a.train.at(p.neighbor));
                    }
                }
                train_x = std::move(res.x);
                train_y = std::move(res.y);
                if (!cv.keep_weights_with_resampling) {
                    fold_model.weights = ClassWeights{1.0, 1.0};
                }
            }
            rec.train_rows = train_x.rows();
            const auto fitted = train(fold_model, train_x, train_y);
            const auto predicted = fitted.predict(x.select_rows(a.test));
            rec.counts = confusion(predicted, select(all_y, a.test));
            rec.metrics = metrics(rec.counts);
        } catch (const NumericalError& e) {
            throw NumericalError(fold_tag(a.repeat, a.fold) + e.what());
        } catch (const InputError& e) {
            throw InputError(fold_tag(a.repeat, a.fold) + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(fold_tag(a.repeat, a.fold) + e.what());
        }
        report.folds.push_back(std::move(rec));
    }
    return report;
}

std::string format_metric(std::optional<double> v) {
    if (!v) {
        return "NA";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *v);
    return std::string(buf, ptr);
}

void write_cv_rows(std::ostream& out, const CvReport& report, std::string_view label) {
    const auto prefix = [&] {
        if (!label.empty()) {
            out << label << ',';
        }
    };
    for (const auto& f : report.folds) {
        for (auto m : kAllMetrics) {
            prefix();
            out << f.repeat << ',' << f.fold << ',' << metric_name(m) << ',' << format_metric(metric_value(f.metrics, m))
                << '\n';
        }
    }
    for (auto m : kAllMetrics) {
        const auto s = report.summary(m);
        prefix();
        out << "mean,," << metric_name(m) << ',' << format_metric(s.mean) << '\n';
        prefix();
        out << "std,," << metric_name(m) << ',' << format_metric(s.stddev) << '\n';
        prefix();
        out << "skipped,," << metric_name(m) << ',' << s.skipped << '\n';
    }
}

void write_cv_csv(std::ostream& out, const CvReport& report, std::string_view label) {
    if (!label.empty()) {
        out << "model,";
    }
    out << "repeat,fold,metric,value\n";
    write_cv_rows(out, report, label);
}

}  // namespace tsad
