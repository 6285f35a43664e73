#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "tsad/resampling.hpp"

using namespace tsad;

namespace {

ResampleSpec make_spec(ResampleMethod m, std::uint64_t seed = 3) {
    ResampleSpec s;
    s.method = m;
    s.seed = seed;
    return s;
}

// Exhaustive k-NN: sort every candidate by (distance, index).
std::vector<std::size_t> brute_knn(const FeatureMatrix& x, std::size_t q, const std::vector<std::size_t>& cand,
                                   std::size_t k) {
    std::vector<std::pair<double, std::size_t>> d;
    for (auto c : cand) {
        if (c != q) d.emplace_back(test::euclid(x.row(q), x.row(c)), c);
    }
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, d.size()); ++i) out.push_back(d[i].second);
    return out;
}

std::vector<std::size_t> rows_with(const Labels& y, std::uint8_t label) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == label) out.push_back(i);
    }
    return out;
}

void check_common(const FeatureMatrix& x, const Labels& y, const ResampleResult& r) {
    REQUIRE(r.original_rows == x.rows());
    REQUIRE(r.x.rows() == x.rows() + r.synthetic_count());
    REQUIRE(r.y.size() == r.x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        CHECK(std::equal(x.row(i).begin(), x.row(i).end(), r.x.row(i).begin()));
        CHECK(r.y[i] == y[i]);
    }
    const auto minority = minority_label(y);
    for (std::size_t s = 0; s < r.synthetic_count(); ++s) {
        const auto& p = r.provenance[s];
        const auto row = r.x.row(x.rows() + s);
        CHECK(r.y[x.rows() + s] == minority);
        CHECK(y[p.seed] == minority);
        CHECK(y[p.neighbor] == minority);
        CHECK(p.lambda >= 0.0);
        CHECK(p.lambda <= 1.0);
        const auto seed = x.row(p.seed);
        const auto nb = x.row(p.neighbor);
        if (p.kind == Provenance::Kind::Duplicate) {
            CHECK(std::equal(row.begin(), row.end(), seed.begin()));
            continue;
        }
        // Interpolants lie on [seed, neighbor]; extrapolants on [seed, 2 seed - neighbor].
        std::vector<double> anchor(nb.begin(), nb.end());
        if (p.kind == Provenance::Kind::Extrapolated) {
            for (std::size_t c = 0; c < anchor.size(); ++c) anchor[c] = 2.0 * seed[c] - nb[c];
        }
        const double lhs = test::euclid(row, seed) + test::euclid(row, anchor);
        CHECK(std::abs(lhs - test::euclid(seed, anchor)) <= 1e-9 * std::max(1.0, test::euclid(seed, anchor)));
    }
}

}  // namespace

TEST_CASE("deficit arithmetic") {
    CHECK(oversample_deficit(10, 90, 1.0) == 80);
    CHECK(oversample_deficit(10, 90, 0.5) == 35);
    CHECK(oversample_deficit(50, 50, 1.0) == 0);
    CHECK(oversample_deficit(60, 90, 0.5) == 0);
    CHECK(minority_label(Labels{0, 0, 1}) == 1);
    CHECK(minority_label(Labels{1, 1, 0}) == 0);
}

TEST_CASE("random oversampling duplicates minority rows to the target") {
    auto [x, y] = test::blobs(90, 10, 2, 2.0, 1);
    const auto r = random_oversample(x, y, make_spec(ResampleMethod::Ros));
    check_common(x, y, r);
    CHECK(r.synthetic_count() == 80);
    CHECK(std::count(r.y.begin(), r.y.end(), 1) == 90);
    for (const auto& p : r.provenance) {
        CHECK(p.kind == Provenance::Kind::Duplicate);
        CHECK(p.seed >= 90);
    }
    const auto again = random_oversample(x, y, make_spec(ResampleMethod::Ros));
    CHECK(again.x == r.x);

    auto [bx, by] = test::blobs(20, 20, 2, 2.0, 2);
    CHECK(random_oversample(bx, by, make_spec(ResampleMethod::Ros)).synthetic_count() == 0);
    CHECK_THROWS_AS((void)random_oversample(bx, Labels(40, 0), make_spec(ResampleMethod::Ros)), DegenerateLabelsError);
}

TEST_CASE("nearest neighbors agree with exhaustive search") {
    auto [x, y] = test::blobs(60, 40, 3, 1.0, 5);
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t q = 0; q < x.rows(); q += 7) {
        for (std::size_t k : {1, 5, 10}) CHECK(nearest_neighbors(x, q, all, k) == brute_knn(x, q, all, k));
    }
    // Ties broken by lower index.
    FeatureMatrix grid = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}};
    const std::vector<std::size_t> cand = {0, 1, 2, 3};
    CHECK(nearest_neighbors(grid, 0, cand, 2) == std::vector<std::size_t>{1, 2});
}

TEST_CASE("SMOTE interpolates on minority segments") {
    SUBCASE("two minority points: synthetics lie on the segment, midpoint when lambda is one half") {
        FeatureMatrix x = {{0, 0}, {2, 2}, {5, 5}, {6, 5}, {5, 6}, {6, 6}};
        const Labels y = {1, 1, 0, 0, 0, 0};
        auto s = make_spec(ResampleMethod::Smote);
        s.k_neighbors = 1;
        const auto r = smote(x, y, s);
        check_common(x, y, r);
        CHECK(r.synthetic_count() == 2);
        for (std::size_t i = 0; i < r.synthetic_count(); ++i) {
            const auto& p = r.provenance[i];
            const auto row = r.x.row(6 + i);
            for (std::size_t c = 0; c < 2; ++c) {
                CHECK(row[c] == x(p.seed, c) + p.lambda * (x(p.neighbor, c) - x(p.seed, c)));
            }
            CHECK(row[0] == doctest::Approx(2.0 * (p.seed == 0 ? p.lambda : 1.0 - p.lambda)));
        }
        // lambda = 0.5 from (0,0) toward (2,2) is (1,1).
        CHECK(0.0 + 0.5 * (2.0 - 0.0) == 1.0);
    }
    SUBCASE("neighbors are the k nearest minority rows and synthetics stay in the minority bounding box") {
        auto [x, y] = test::blobs(200, 30, 3, 1.5, 7);
        const auto r = smote(x, y, make_spec(ResampleMethod::Smote));
        check_common(x, y, r);
        CHECK(r.synthetic_count() == 170);
        const auto minority = rows_with(y, 1);
        for (const auto& p : r.provenance) {
            const auto nn = brute_knn(x, p.seed, minority, 5);
            CHECK(std::find(nn.begin(), nn.end(), p.neighbor) != nn.end());
        }
        for (std::size_t c = 0; c < 3; ++c) {
            double lo = 1e300, hi = -1e300;
            for (auto i : minority) {
                lo = std::min(lo, x(i, c));
                hi = std::max(hi, x(i, c));
            }
            for (std::size_t i = x.rows(); i < r.x.rows(); ++i) {
                CHECK(r.x(i, c) >= lo);
                CHECK(r.x(i, c) <= hi);
            }
        }
    }
    SUBCASE("nothing requested, too few minority rows") {
        auto [x, y] = test::blobs(20, 20, 2, 1.0, 8);
        CHECK(smote(x, y, make_spec(ResampleMethod::Smote)).x == x);
        auto [sx, sy] = test::blobs(50, 5, 2, 1.0, 9);
        CHECK_THROWS_AS((void)smote(sx, sy, make_spec(ResampleMethod::Smote)), InsufficientMinorityError);
    }
}

TEST_CASE("neighborhood classes follow the danger rule") {
    // Minority 0 sits inside the majority cloud, minority 1..4 form their own cluster far away.
    FeatureMatrix x = {{0, 0}, {10, 10}, {10.5, 10}, {10, 10.5}, {10.5, 10.5}, {0.5, 0}, {0, 0.5}, {-0.5, 0},
                       {0, -0.5}, {0.6, 0.6}};
    const Labels y = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    const std::vector<std::size_t> minority = {0, 1, 2, 3, 4};
    const auto cls = classify_neighborhoods(x, y, minority, 3);
    CHECK(cls[0] == NeighborhoodClass::Noise);
    for (std::size_t i = 1; i < 5; ++i) CHECK(cls[i] == NeighborhoodClass::Safe);

    // Brute-force oracle on random data.
    auto [bx, by] = test::blobs(120, 30, 2, 1.0, 10);
    const auto bmin = rows_with(by, 1);
    std::vector<std::size_t> all(bx.rows());
    std::iota(all.begin(), all.end(), 0);
    const auto got = classify_neighborhoods(bx, by, bmin, 10);
    for (std::size_t i = 0; i < bmin.size(); ++i) {
        const auto nn = brute_knn(bx, bmin[i], all, 10);
        const auto maj = std::count_if(nn.begin(), nn.end(), [&](std::size_t j) { return by[j] == 0; });
        const auto want = maj == 10 ? NeighborhoodClass::Noise
                                    : (2 * maj >= 10 ? NeighborhoodClass::Danger : NeighborhoodClass::Safe);
        CHECK(got[i] == want);
    }
}

TEST_CASE("borderline SMOTE seeds only from danger points") {
    SUBCASE("minority pair at the edge of the majority grid") {
        // Majority grid near the origin, minority cluster around (6, 6); minority rows 20 and 21
        // sit together at the edge of the grid, so each sees the other plus five majority rows.
        FeatureMatrix x(0, 2);
        Labels y;
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 4; ++j) {
                const std::vector<double> row = {0.4 * i, 0.4 * j};
                x.append_row(row);
                y.push_back(0);
            }
        }
        for (double ex : {2.0, 2.2}) {
            const std::vector<double> edge = {ex, 0.6};
            x.append_row(edge);
            y.push_back(1);
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const std::vector<double> row = {6.0 + 0.3 * i, 6.0 + 0.3 * j};
                x.append_row(row);
                y.push_back(1);
            }
        }
        auto s = make_spec(ResampleMethod::BorderlineSmote);
        s.m_neighbors = 6;
        s.k_neighbors = 3;
        const auto minority = rows_with(y, 1);
        const auto cls = classify_neighborhoods(x, y, minority, 6);
        std::vector<std::size_t> danger;
        for (std::size_t i = 0; i < minority.size(); ++i) {
            if (cls[i] == NeighborhoodClass::Danger) danger.push_back(minority[i]);
        }
        REQUIRE(danger == std::vector<std::size_t>{20, 21});
        const auto r = borderline_smote(x, y, s);
        check_common(x, y, r);
        CHECK(r.synthetic_count() == 9);
        for (const auto& p : r.provenance) CHECK((p.seed == 20 || p.seed == 21));
    }
    SUBCASE("no danger point returns the input flagged") {
        auto [x, y] = test::blobs(50, 20, 2, 30.0, 11);
        const auto r = borderline_smote(x, y, make_spec(ResampleMethod::BorderlineSmote));
        CHECK(r.empty_seed_set);
        CHECK_FALSE(r.warning.empty());
        CHECK(r.x == x);
    }
}

TEST_CASE("SVM-SMOTE seeds are minority rows with margin at most one") {
    auto [x, y] = test::blobs(150, 25, 2, 2.5, 12);
    auto s = make_spec(ResampleMethod::SvmSmote);
    const auto r = svm_smote(x, y, s);
    check_common(x, y, r);

    CostModelSpec svm;
    svm.learner = Learner::LinearSvm;
    svm.svm = s.svm;
    svm.seed = s.seed;
    const auto model = train_linear_svm(svm, x, y);
    const auto* lin = model.linear();
    // Margins recomputed from the raw coefficients.
    std::set<std::size_t> oracle;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (!y[i]) continue;
        double f = lin->intercept;
        for (std::size_t c = 0; c < 2; ++c) {
            f += lin->coefficients[c] * (x(i, c) - lin->standardizer.mean[c]) / lin->standardizer.scale[c];
        }
        if (f <= 1.0) oracle.insert(i);
    }
    const auto sv = minority_support_vectors(model, x, y);
    CHECK(std::set<std::size_t>(sv.begin(), sv.end()) == oracle);
    CHECK(oracle.size() < 25);
    for (const auto& p : r.provenance) CHECK(oracle.count(p.seed) == 1);

    const auto minority = rows_with(y, 1);
    const auto cls = classify_neighborhoods(x, y, sv, s.m_neighbors);
    for (const auto& p : r.provenance) {
        const auto at = std::find(sv.begin(), sv.end(), p.seed) - sv.begin();
        CHECK(cls[at] != NeighborhoodClass::Noise);
        CHECK((p.kind == Provenance::Kind::Interpolated) == (cls[at] == NeighborhoodClass::Danger));
    }

    auto [bx, by] = test::blobs(30, 30, 2, 1.0, 13);
    CHECK(svm_smote(bx, by, s).synthetic_count() == 0);
}

TEST_CASE("ADASYN allocation follows neighborhood hardness") {
    auto [x, y] = test::blobs(300, 40, 2, 1.2, 14);
    auto s = make_spec(ResampleMethod::Adasyn);
    const auto alloc = adasyn_allocation(x, y, s);
    const auto minority = rows_with(y, 1);
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), 0);
    std::vector<double> hard;
    for (auto i : minority) {
        const auto nn = brute_knn(x, i, all, 5);
        hard.push_back(double(std::count_if(nn.begin(), nn.end(), [&](std::size_t j) { return y[j] == 0; })) / 5.0);
    }
    const double total = std::accumulate(hard.begin(), hard.end(), 0.0);
    const double g = double(300 - 40);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < minority.size(); ++i) {
        CHECK(alloc[i] == static_cast<std::size_t>(std::llround(hard[i] / total * g)));
        if (hard[i] == 0.0) CHECK(alloc[i] == 0);
        sum += alloc[i];
    }
    const auto max_hard = std::max_element(hard.begin(), hard.end()) - hard.begin();
    CHECK(alloc[max_hard] == *std::max_element(alloc.begin(), alloc.end()));
    CHECK(double(sum) >= g - 40.0 / 2);
    CHECK(double(sum) <= g + 40.0 / 2);

    const auto r = adasyn(x, y, s);
    check_common(x, y, r);
    CHECK(r.synthetic_count() == sum);
    for (std::size_t i = 0; i < minority.size(); ++i) {
        const auto made = std::count_if(r.provenance.begin(), r.provenance.end(),
                                        [&](const Provenance& p) { return p.seed == minority[i]; });
        CHECK(std::size_t(made) == alloc[i]);
    }

    auto [fx, fy] = test::blobs(50, 20, 2, 40.0, 15);
    const auto flagged = adasyn(fx, fy, s);
    CHECK(flagged.empty_seed_set);
    CHECK(flagged.x == fx);
}

TEST_CASE("every method is deterministic and dispatches by name") {
    auto [x, y] = test::blobs(120, 20, 3, 1.0, 16);
    for (auto m : {ResampleMethod::Ros, ResampleMethod::Smote, ResampleMethod::BorderlineSmote,
                   ResampleMethod::SvmSmote, ResampleMethod::Adasyn}) {
        const auto a = resample(x, y, make_spec(m, 77));
        const auto b = resample(x, y, make_spec(m, 77));
        CHECK(a.x == b.x);
        CHECK(a.y == b.y);
        check_common(x, y, a);
        CHECK(resample_method_from_name(resample_method_name(m)) == m);
    }
    CHECK_FALSE(resample_method_from_name("tomek"));
    auto bad = make_spec(ResampleMethod::Smote);
    bad.k_neighbors = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = make_spec(ResampleMethod::Smote);
    bad.target_ratio = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("provenance CSV lists every added row") {
    auto [x, y] = test::blobs(30, 10, 2, 1.0, 17);
    const auto r = smote(x, y, make_spec(ResampleMethod::Smote));
    std::ostringstream out;
    write_provenance_csv(out, r);
    const auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(r.synthetic_count() + 1));
}
