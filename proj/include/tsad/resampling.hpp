#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsad/cost_models.hpp"
#include "tsad/error.hpp"
#include "tsad/matrix.hpp"

namespace tsad {

enum class ResampleMethod { Ros, Smote, BorderlineSmote, SvmSmote, Adasyn };

[[nodiscard]] std::string_view resample_method_name(ResampleMethod m);
[[nodiscard]] std::optional<ResampleMethod> resample_method_from_name(std::string_view name);

struct ResampleSpec {
    ResampleMethod method = ResampleMethod::Smote;
    std::size_t k_neighbors = 5;
    std::size_t m_neighbors = 10;  ///< neighborhood used for the danger/noise test
    double target_ratio = 1.0;     ///< minority : majority after resampling
    std::uint64_t seed = 0;
    /// SVM-SMOTE's boundary model. Softer than the classifier default so the
    /// margin holds a usable share of the minority class.
    SvmParams svm{.iterations = 5000, .lambda = 0.01, .t0 = 1.0};

    void validate() const;
};

/// Where an appended row came from. Indices refer to rows of the resampler's input.
struct Provenance {
    enum class Kind { Duplicate, Interpolated, Extrapolated };

    Kind kind = Kind::Duplicate;
    std::size_t seed = 0;
    std::size_t neighbor = 0;  ///< equals `seed` for duplicates
    double lambda = 0.0;       ///< position along the segment, in [0, 1]
};

/**
 * Output of every oversampler: the input rows unchanged and in order, followed
 * by the added minority rows. `provenance[i]` describes row `original_rows + i`.
 */
struct ResampleResult {
    FeatureMatrix x;
    Labels y;
    std::size_t original_rows = 0;
    std::vector<Provenance> provenance;
    bool empty_seed_set = false;  ///< no eligible seeds: input returned unchanged
    std::string warning;

    [[nodiscard]] std::size_t synthetic_count() const noexcept { return provenance.size(); }
};

class InsufficientMinorityError : public InputError {
public:
    using InputError::InputError;
};

/// Rows to add so that minority / majority reaches `ratio` (never negative).
[[nodiscard]] std::size_t oversample_deficit(std::size_t n_minority, std::size_t n_majority, double ratio);

[[nodiscard]] ResampleResult random_oversample(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                               const ResampleSpec& spec);
[[nodiscard]] ResampleResult smote(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec);
/// Borderline-1: interpolates from DANGER minority points toward minority neighbors.
[[nodiscard]] ResampleResult borderline_smote(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                              const ResampleSpec& spec);
[[nodiscard]] ResampleResult svm_smote(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                       const ResampleSpec& spec);
[[nodiscard]] ResampleResult adasyn(const FeatureMatrix& x, std::span<const std::uint8_t> y, const ResampleSpec& spec);

/// Dispatches on spec.method.
[[nodiscard]] ResampleResult resample(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                      const ResampleSpec& spec);

// Building blocks, exposed for inspection and testing.

enum class NeighborhoodClass { Safe, Danger, Noise };

/// Indices of the k nearest rows among `candidates` to row `query` (Euclidean,
/// the query itself excluded, ties broken by lower index).
[[nodiscard]] std::vector<std::size_t> nearest_neighbors(const FeatureMatrix& x, std::size_t query,
                                                         std::span<const std::size_t> candidates, std::size_t k);

/// The minority label: the rarer class (positive on a tie).
[[nodiscard]] std::uint8_t minority_label(std::span<const std::uint8_t> y);

/// Classifies each minority row by its m nearest neighbors over the full set:
/// NOISE if all are majority, DANGER if at least half are, SAFE otherwise.
[[nodiscard]] std::vector<NeighborhoodClass> classify_neighborhoods(const FeatureMatrix& x,
                                                                    std::span<const std::uint8_t> y,
                                                                    std::span<const std::size_t> minority,
                                                                    std::size_t m);

/// Minority rows whose margin under `model` (minority treated as +1) is at most 1.
[[nodiscard]] std::vector<std::size_t> minority_support_vectors(const TrainedClassifier& model, const FeatureMatrix& x,
                                                                std::span<const std::uint8_t> y);

/// Per-minority-row ADASYN allocation, in the order of the minority rows.
[[nodiscard]] std::vector<std::size_t> adasyn_allocation(const FeatureMatrix& x, std::span<const std::uint8_t> y,
                                                         const ResampleSpec& spec);

/// seed, neighbor, kind, lambda for each added row.
void write_provenance_csv(std::ostream& out, const ResampleResult& result);

}  // namespace tsad
