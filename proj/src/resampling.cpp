#include "tsad/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "tsad/random.hpp"

namespace tsad {

namespace {

struct ClassSplit {
    std::uint8_t minority_label = 1;
    std::vector<std::size_t> minority;
    std::vector<std::size_t> majority;
};

ClassSplit split_classes(const FeatureMatrix& x, std::span<const std::uint8_t> y) {
    if (x.rows() != y.size()) {
        throw std::invalid_argument("resample: " + std::to_string(x.rows()) + " rows but " +
                                    std::to_string(y.size()) + " labels");
    }
    ClassSplit split;
    split.minority_label = minority_label(y);
    for (std::size_t i = 0; i < y.size(); ++i) {
        ((y[i] != 0) == (split.minority_label != 0) ? split.minority : split.majority).push_back(i);
    }
    if (split.minority.empty() || split.majority.empty()) {
        throw DegenerateLabelsError("resample: both classes must be present");
    }
    return split;
}

ResampleResult unchanged(const FeatureMatrix& x, std::span<const std::uint8_t> y) {
    ResampleResult r;
    r.x = x;
    r.y.assign(y.begin(), y.end());
    r.original_rows = x.rows();
    return r;
}

ResampleResult flagged(const FeatureMatrix& x, std::span<const std::uint8_t> y, std::string warning) {
    auto r = unchanged(x, y);
    r.empty_seed_set = true;
    r.warning = std::move(warning);
    return r;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void require_neighbors(const ClassSplit& split, std::size_t k) {
    if (split.minority.size() <= k) {
        throw InsufficientMinorityError("resample: minority count " + std::to_string(split.minority.size()) +
                                        " must exceed k_neighbors " + std::to_string(k));
    }
}

// Appends seed + lambda * (neighbor - seed), or the mirrored point for extrapolation.
void append_synthetic(ResampleResult& out, std::size_t seed, std::size_t neighbor, double lambda,
                      Provenance::Kind kind, std::uint8_t label, std::vector<double>& scratch) {
    const auto a = out.x.row(seed);
    const auto b = out.x.row(neighbor);
    scratch.resize(a.size());
    const double sign = kind == Provenance::Kind::Extrapolated ? -1.0 : 1.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        scratch[c] = a[c] + sign * lambda * (b[c] - a[c]);
    }
    out.x.append_row(scratch);
    out.y.push_back(label);
    out.provenance.push_back({kind, seed, neighbor, lambda});
}

std::vector<std::vector<std::size_t>> minority_neighbor_table(const FeatureMatrix& x, const ClassSplit& split,
                                                              std::span<const std::size_t> rows, std::size_t k) {
    std::vector<std::vector<std::size_t>> table;
    table.reserve(rows.size());
    for (auto r : rows) {
        table.push_back(nearest_neighbors(x, r, split.minority, k));
    }
    return table;
}

// Draws `count` synthetics, each from a uniformly chosen seed in `seeds`.
void interpolate_from_seeds(ResampleResult& out, const ClassSplit& split, std::span<const std::size_t> seeds,
                            const std::vector<std::vector<std::size_t>>& neighbors,
                            std::span<const Provenance::Kind> kinds, std::size_t count, Rng& rng) {
    std::vector<double> scratch;
    for (std::size_t s = 0; s < count; ++s) {
        const auto pick = uniform_index(rng, seeds.size());
        const auto& nn = neighbors[pick];
        const auto neighbor = nn[uniform_index(rng, nn.size())];
        const double lambda = uniform_unit(rng);
        append_synthetic(out, seeds[pick], neighbor, lambda, kinds[pick], split.minority_label, scratch);
    }
}

}  // namespace

std::string_view resample_method_name(ResampleMethod m) {
    switch (m) {
        case ResampleMethod::Ros: return "ros";
        case ResampleMethod::Smote: return "smote";
        case ResampleMethod::BorderlineSmote: return "blsmote";
        case ResampleMethod::SvmSmote: return "svmsmote";
        case ResampleMethod::Adasyn: return "adasyn";
    }
    return "?";
}

std::optional<ResampleMethod> resample_method_from_name(std::string_view name) {
    for (auto m : {ResampleMethod::Ros, ResampleMethod::Smote, ResampleMethod::BorderlineSmote,
                   ResampleMethod::SvmSmote, ResampleMethod::Adasyn}) {
        if (resample_method_name(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

void ResampleSpec::validate() const {
    if (k_neighbors < 1) {
        throw std::invalid_argument("k_neighbors must be >= 1");
    }
    if (m_neighbors < 1) {
        throw std::invalid_argument("m_neighbors must be >= 1");
    }
    if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
        throw std::invalid_argument("target_ratio must lie in (0, 1]");
    }
}

std::size_t oversample_deficit(std::size_t n_minority, std::size_t n_majority, double ratio) {
    const auto wanted = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n_majority)));
    return wanted > n_minority ? wanted - n_minority : 0;
}

std::uint8_t minority_label(std::span<const std::uint8_t> y) {
    const auto pos = static_cast<std::size_t>(std::count_if(y.begin(), y.end(), [](auto v) { return v != 0; }));
    return pos <= y.size() - pos ? 1 : 0;
}

std::vector<std::size_t> nearest_neighbors(const FeatureMatrix& x, std::size_t query,
                                           std::span<const std::size_t> candidates, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(candidates.size());
    const auto q = x.row(query);
    for (auto c : candidates) {
        if (c != query) {
            dist.emplace_back(squared_distance(q, x.row(c)), c);
        }
    }
    const auto take = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    std::vector<std::size_t> out(take);
    for (std::size_t i = 0; i < take; ++i) {
        out[i] = dist[i].second;
    }
    return out;
}

std::vector<NeighborhoodClass> classify_neighborhoods(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                                      std::span<const std::size_t> minority, std::size_t m) {
    std::vector<std::size_t> everyone(x.rows());
    std::iota(everyone.begin(), everyone.end(), std::size_t{0});
    const auto min_label = minority_label(y);
    std::vector<NeighborhoodClass> out;
    out.reserve(minority.size());
    for (auto i : minority) {
        const auto nn = nearest_neighbors(x, i, everyone, m);
        const auto majority = static_cast<std::size_t>(
            std::count_if(nn.begin(), nn.end(), [&](std::size_t j) { return (y[j] != 0) != (min_label != 0); }));
        if (majority == nn.size()) {
            out.push_back(NeighborhoodClass::Noise);
        } else if (2 * majority >= nn.size()) {
            out.push_back(NeighborhoodClass::Danger);
        } else {
            out.push_back(NeighborhoodClass::Safe);
        }
    }
    return out;
}

ResampleResult random_oversample(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec) {
    spec.validate();
    const auto split = split_classes(x, y);
    const auto needed = oversample_deficit(split.minority.size(), split.majority.size(), spec.target_ratio);
    auto out = unchanged(x, y);
    auto rng = make_rng(spec.seed, {0x524f53});
    out.x.reserve_rows(x.rows() + needed);
    std::vector<double> copy;
    for (std::size_t s = 0; s < needed; ++s) {
        const auto source = split.minority[uniform_index(rng, split.minority.size())];
        const auto row = x.row(source);
        copy.assign(row.begin(), row.end());
        out.x.append_row(copy);
        out.y.push_back(split.minority_label);
        out.provenance.push_back({Provenance::Kind::Duplicate, source, source, 0.0});
    }
    return out;
}

ResampleResult smote(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec) {
    spec.validate();
    const auto split = split_classes(x, y);
    const auto needed = oversample_deficit(split.minority.size(), split.majority.size(), spec.target_ratio);
    if (needed == 0) {
        return unchanged(x, y);
    }
    require_neighbors(split, spec.k_neighbors);
    auto out = unchanged(x, y);
    out.x.reserve_rows(x.rows() + needed);
    const auto neighbors = minority_neighbor_table(x, split, split.minority, spec.k_neighbors);
    const std::vector kinds(split.minority.size(), Provenance::Kind::Interpolated);
    auto rng = make_rng(spec.seed, {0x534d4f5445});
    interpolate_from_seeds(out, split, split.minority, neighbors, kinds, needed, rng);
    return out;
}

ResampleResult borderline_smote(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec) {
    spec.validate();
    const auto split = split_classes(x, y);
    const auto needed = oversample_deficit(split.minority.size(), split.majority.size(), spec.target_ratio);
    if (needed == 0) {
        return unchanged(x, y);
    }
    require_neighbors(split, spec.k_neighbors);
    const auto classes = classify_neighborhoods(x, y, split.minority, spec.m_neighbors);
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == NeighborhoodClass::Danger) {
            seeds.push_back(split.minority[i]);
        }
    }
    if (seeds.empty()) {
        return flagged(x, y, "borderline_smote: no minority point is in danger; input returned unchanged");
    }
    auto out = unchanged(x, y);
    out.x.reserve_rows(x.rows() + needed);
    const auto neighbors = minority_neighbor_table(x, split, seeds, spec.k_neighbors);
    const std::vector kinds(seeds.size(), Provenance::Kind::Interpolated);
    auto rng = make_rng(spec.seed, {0x424c534d4f5445});
    interpolate_from_seeds(out, split, seeds, neighbors, kinds, needed, rng);
    return out;
}

std::vector<std::size_t> minority_support_vectors(const TrainedClassifier& model, const FeatureMatrix& x,
                                                  std::span<const std::uint8_t> y) {
    const auto* linear = model.linear();
    if (linear == nullptr) {
        throw std::invalid_argument("minority_support_vectors: needs a linear model");
    }
    const auto min_label = minority_label(y);
    const double sign = min_label ? 1.0 : -1.0;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if ((y[i] != 0) == (min_label != 0) && sign * linear->decision(x.row(i)) <= 1.0) {
            out.push_back(i);
        }
    }
    return out;
}

ResampleResult svm_smote(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec) {
    spec.validate();
    const auto split = split_classes(x, y);
    const auto needed = oversample_deficit(split.minority.size(), split.majority.size(), spec.target_ratio);
    if (needed == 0) {
        return unchanged(x, y);
    }
    require_neighbors(split, spec.k_neighbors);

    CostModelSpec svm_spec;
    svm_spec.learner = Learner::LinearSvm;
    svm_spec.svm = spec.svm;
    svm_spec.seed = spec.seed;
    const auto model = train_linear_svm(svm_spec, x, y);
    const auto support = minority_support_vectors(model, x, y);
    const auto classes = classify_neighborhoods(x, y, support, spec.m_neighbors);

    std::vector<std::size_t> seeds;
    std::vector<Provenance::Kind> kinds;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (classes[i] == NeighborhoodClass::Noise) {
            continue;
        }
        seeds.push_back(support[i]);
        // Crowded by the majority: stay between minority points. Otherwise push outward.
        kinds.push_back(classes[i] == NeighborhoodClass::Danger ? Provenance::Kind::Interpolated
                                                                : Provenance::Kind::Extrapolated);
    }
    if (seeds.empty()) {
        return flagged(x, y, "svm_smote: no usable minority support vector; input returned unchanged");
    }
    auto out = unchanged(x, y);
    out.x.reserve_rows(x.rows() + needed);
    const auto neighbors = minority_neighbor_table(x, split, seeds, spec.k_neighbors);
    auto rng = make_rng(spec.seed, {0x53564d534d4f5445});
    interpolate_from_seeds(out, split, seeds, neighbors, kinds, needed, rng);
    return out;
}

namespace {

// Share of majority rows among each minority row's k nearest neighbors.
std::vector<double> adasyn_hardness(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ClassSplit& split,
                                    std::size_t k) {
    std::vector<std::size_t> everyone(x.rows());
    std::iota(everyone.begin(), everyone.end(), std::size_t{0});
    std::vector<double> ratio;
    ratio.reserve(split.minority.size());
    for (auto i : split.minority) {
        const auto nn = nearest_neighbors(x, i, everyone, k);
        const auto majority = std::count_if(nn.begin(), nn.end(),
                                            [&](std::size_t j) { return (y[j] != 0) != (split.minority_label != 0); });
        ratio.push_back(nn.empty() ? 0.0 : static_cast<double>(majority) / static_cast<double>(nn.size()));
    }
    return ratio;
}

std::vector<std::size_t> allocate(const std::vector<double>& hardness, const ClassSplit& split, double target_ratio) {
    const double total = std::accumulate(hardness.begin(), hardness.end(), 0.0);
    std::vector<std::size_t> alloc(hardness.size(), 0);
    if (total == 0.0 || split.majority.size() <= split.minority.size()) {
        return alloc;
    }
    const double g = static_cast<double>(split.majority.size() - split.minority.size()) * target_ratio;
    for (std::size_t i = 0; i < hardness.size(); ++i) {
        alloc[i] = static_cast<std::size_t>(std::llround(hardness[i] / total * g));
    }
    return alloc;
}

}  // namespace

std::vector<std::size_t> adasyn_allocation(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                           const ResampleSpec& spec) {
    spec.validate();
    const auto split = split_classes(x, y);
    return allocate(adasyn_hardness(x, y, split, spec.k_neighbors), split, spec.target_ratio);
}

ResampleResult adasyn(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec) {
    spec.validate();
    const auto split = split_classes(x, y);
    if (split.majority.size() <= split.minority.size()) {
        return unchanged(x, y);
    }
    require_neighbors(split, spec.k_neighbors);
    const auto hardness = adasyn_hardness(x, y, split, spec.k_neighbors);
    if (std::all_of(hardness.begin(), hardness.end(), [](double r) { return r == 0.0; })) {
        return flagged(x, y, "adasyn: no minority point has majority neighbors; input returned unchanged");
    }
    const auto alloc = allocate(hardness, split, spec.target_ratio);
    const auto requested = std::accumulate(alloc.begin(), alloc.end(), std::size_t{0});
    auto out = unchanged(x, y);
    out.x.reserve_rows(x.rows() + requested);
    auto rng = make_rng(spec.seed, {0x414441535944});
    std::vector<double> scratch;
    for (std::size_t i = 0; i < split.minority.size(); ++i) {
        if (alloc[i] == 0) {
            continue;
        }
        const auto seed = split.minority[i];
        const auto nn = nearest_neighbors(x, seed, split.minority, spec.k_neighbors);
        for (std::size_t s = 0; s < alloc[i]; ++s) {
            const auto neighbor = nn[uniform_index(rng, nn.size())];
            append_synthetic(out, seed, neighbor, uniform_unit(rng), Provenance::Kind::Interpolated,
                             split.minority_label, scratch);
        }
    }
    return out;
}

ResampleResult resample(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec) {
    switch (spec.method) {
        case ResampleMethod::Ros: return random_oversample(x, y, spec);
        case ResampleMethod::Smote: return smote(x, y, spec);
        case ResampleMethod::BorderlineSmote: return borderline_smote(x, y, spec);
        case ResampleMethod::SvmSmote: return svm_smote(x, y, spec);
        case ResampleMethod::Adasyn: return adasyn(x, y, spec);
    }
    throw std::invalid_argument("unknown resampling method");
}

void write_provenance_csv(std::ostream& out, const ResampleResult& result) {
    out << "row,kind,seed,neighbor,lambda\n";
    for (std::size_t i = 0; i < result.provenance.size(); ++i) {
        const auto& p = result.provenance[i];
        const char* kind = p.kind == Provenance::Kind::Duplicate      ? "duplicate"
                           : p.kind == Provenance::Kind::Interpolated ? "interpolated"
                                                                      : "extrapolated";
        out << result.original_rows + i << ',' << kind << ',' << p.seed << ',' << p.neighbor << ',' << p.lambda
            << '\n';
    }
}

}  // namespace tsad
