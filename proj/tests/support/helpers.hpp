#pragma once

// Small builders and independent reference computations shared by the tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tsad/dataset.hpp"
#include "tsad/matrix.hpp"
#include "tsad/time.hpp"

namespace tsad::test {

inline Timestamp minute(std::int64_t i) {
    return from_unix_nanos(1'455'494'400'000'000'000LL + i * 60'000'000'000LL);
}

/// Frame over all nine channels; channel c at row r = f(c, r).
template <class F>
TimeSeriesFrame make_frame(std::size_t rows, F&& f, Labels labels = {}) {
    std::vector<Timestamp> ts(rows);
    std::vector<std::vector<double>> values(kChannelCount, std::vector<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        ts[r] = minute(static_cast<std::int64_t>(r));
        for (std::size_t c = 0; c < kChannelCount; ++c) values[c][r] = f(c, r);
    }
    if (labels.empty()) labels.assign(rows, 0);
    return TimeSeriesFrame(std::move(ts), {kAllChannels.begin(), kAllChannels.end()}, std::move(values),
                           std::move(labels));
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<double> out(n);
    for (auto& v : out) v = g(rng);
    return out;
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
    auto steps = white_noise(n, seed);
    for (std::size_t i = 1; i < n; ++i) steps[i] += steps[i - 1];
    return steps;
}

inline double euclid(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

/// Two Gaussian blobs in d dimensions; positives centred at `shift`.
inline std::pair<FeatureMatrix, Labels> blobs(std::size_t n_neg, std::size_t n_pos, std::size_t d, double shift,
                                              std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    FeatureMatrix x(n_neg + n_pos, d);
    Labels y(n_neg + n_pos, 0);
    for (std::size_t i = 0; i < n_neg + n_pos; ++i) {
        const bool pos = i >= n_neg;
        y[i] = pos ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) x(i, j) = g(rng) + (pos ? shift : 0.0);
    }
    return {std::move(x), std::move(y)};
}

}  // namespace tsad::test
