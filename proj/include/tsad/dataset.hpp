#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsad/error.hpp"
#include "tsad/matrix.hpp"
#include "tsad/time.hpp"

namespace tsad {

/// The nine water-quality channels, in canonical column order.
enum class ChannelId { Tp, Cl, pH, Redox, Leit, Trueb, Cl_2, Fm, Fm_2 };

inline constexpr std::size_t kChannelCount = 9;

inline constexpr std::array<ChannelId, kChannelCount> kAllChannels = {
    ChannelId::Tp,   ChannelId::Cl,   ChannelId::pH, ChannelId::Redox, ChannelId::Leit,
    ChannelId::Trueb, ChannelId::Cl_2, ChannelId::Fm, ChannelId::Fm_2};

[[nodiscard]] std::string_view channel_name(ChannelId id);

/// Accepts canonical names and the `Temp`/`Turbid` aliases (case-sensitive).
[[nodiscard]] std::optional<ChannelId> channel_from_name(std::string_view name);

[[nodiscard]] std::vector<ChannelId> all_channels();

/// A channel with no observed value at all; forward filling cannot repair it.
class UnfixableChannelError : public InputError {
public:
    UnfixableChannelError(ChannelId channel, const std::string& what)
        : InputError(what), channel_(channel) {}
    [[nodiscard]] ChannelId channel() const noexcept { return channel_; }

private:
    ChannelId channel_;
};

/**
 * Timestamp-indexed channels with a boolean EVENT label per row and a per-cell
 * missingness mask. Immutable once constructed.
 *
 * Invariants checked at construction: timestamps strictly increasing, every
 * channel and the label vector have one entry per timestamp, channel names
 * unique. Missing cells hold NaN.
 */
class TimeSeriesFrame {
public:
    TimeSeriesFrame() = default;

    /// `values[c][r]` is channel `channels[c]` at row r. NaN marks a missing cell.
    TimeSeriesFrame(std::vector<Timestamp> timestamps, std::vector<ChannelId> channels,
                    std::vector<std::vector<double>> values, Labels labels);

    [[nodiscard]] std::size_t rows() const noexcept { return timestamps_.size(); }
    [[nodiscard]] bool empty() const noexcept { return timestamps_.empty(); }
    [[nodiscard]] const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }
    [[nodiscard]] const std::vector<ChannelId>& channels() const noexcept { return channels_; }
    [[nodiscard]] const Labels& labels() const noexcept { return labels_; }

    [[nodiscard]] std::optional<std::size_t> channel_index(ChannelId id) const;
    /// Throws std::out_of_range for a channel the frame does not carry.
    [[nodiscard]] std::span<const double> channel(ChannelId id) const;
    [[nodiscard]] std::span<const double> channel_at(std::size_t c) const { return values_[c]; }

    [[nodiscard]] bool is_missing(std::size_t c, std::size_t r) const noexcept { return missing_[c][r] != 0; }
    [[nodiscard]] std::size_t missing_count() const noexcept;
    [[nodiscard]] std::size_t positive_count() const noexcept;

    /// Rows [first, last).
    [[nodiscard]] TimeSeriesFrame slice(std::size_t first, std::size_t last) const;
    /// Rows at `rows`, which must be strictly ascending.
    [[nodiscard]] TimeSeriesFrame select_rows(std::span<const std::size_t> rows) const;

    /// Row-major matrix over `columns` (all channels when empty).
    [[nodiscard]] FeatureMatrix to_matrix(std::span<const ChannelId> columns = {}) const;

    friend bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b);

private:
    std::vector<Timestamp> timestamps_;
    std::vector<ChannelId> channels_;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<std::uint8_t>> missing_;
    Labels labels_;
};

/// Reads the water-quality CSV layout: a `Time` column, the requested channels
/// (extra columns ignored) and `EVENT`. Empty or non-numeric cells are missing.
[[nodiscard]] TimeSeriesFrame parse_csv(std::istream& in,
                                        std::span<const ChannelId> schema = kAllChannels);
[[nodiscard]] TimeSeriesFrame parse_csv(const std::filesystem::path& path,
                                        std::span<const ChannelId> schema = kAllChannels);

/// Emits `Time,<channels...>,EVENT`; finite values in shortest round-trip form.
void write_csv(std::ostream& out, const TimeSeriesFrame& frame);
void write_csv(const std::filesystem::path& path, const TimeSeriesFrame& frame);

/// Forward fill: each missing cell takes the last observed value of its channel.
/// Rows before every channel has been observed at least once are dropped.
[[nodiscard]] TimeSeriesFrame fill_missing(const TimeSeriesFrame& frame);

struct SplitSpec {
    double holdout_fraction = 0.2;
};

/// Earliest ceil((1 - f) * n) rows, then the rest. No shuffling.
[[nodiscard]] std::pair<TimeSeriesFrame, TimeSeriesFrame> chronological_split(const TimeSeriesFrame& frame,
                                                                              const SplitSpec& spec);

}  // namespace tsad
