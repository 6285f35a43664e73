#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tsad {

using Rng = std::mt19937_64;

/// Independent stream for (seed, tags...). Used so that e.g. tree i of a forest
/// draws the same numbers whichever thread builds it.
[[nodiscard]] inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
    std::vector<std::uint32_t> words;
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (auto tag : tags) {
        words.push_back(static_cast<std::uint32_t>(tag));
        words.push_back(static_cast<std::uint32_t>(tag >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// A 64-bit seed for a sub-task, derived from (seed, tags...).
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    auto rng = make_rng(seed, tags);
    return rng();
}

/// Uniform integer in [0, n).
[[nodiscard]] inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Uniform real in [0, 1).
[[nodiscard]] inline double uniform_unit(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace tsad
