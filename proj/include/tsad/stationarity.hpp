#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tsad/dataset.hpp"

namespace tsad {

/**
 * First differences of a frame: row t holds y_t - y_{t-1} and the EVENT label of
 * the original row t. The original first row is kept in `origin` so the levels
 * can be rebuilt by cumulative summation.
 */
struct DifferencedFrame {
    TimeSeriesFrame deltas;
    std::vector<double> origin;  // one value per channel of `deltas`
    Timestamp origin_time{};

    /// Cumulative sum from `origin`; returns a series one longer than `deltas`.
    [[nodiscard]] std::vector<double> reconstruct(std::size_t channel) const;
};

[[nodiscard]] DifferencedFrame difference(const TimeSeriesFrame& frame);

/// Plain first differences of a series, length n - 1.
[[nodiscard]] std::vector<double> difference(std::span<const double> series);

enum class AdfVerdict { Stationary1, Stationary5, Stationary10, NonStationary };

[[nodiscard]] std::string_view verdict_name(AdfVerdict v);

/// Asymptotic critical values for the constant-only regression (1%, 5%, 10%).
inline constexpr std::array<double, 3> kAdfCriticalValues = {-3.43042, -2.86157, -2.56679};

struct AdfResult {
    double statistic = 0.0;  ///< t-ratio of the lagged-level coefficient
    std::size_t lag = 0;     ///< number of lagged differences in the chosen regression
    std::size_t nobs = 0;    ///< observations in the final regression
    std::array<double, 3> critical_values = kAdfCriticalValues;
    AdfVerdict verdict = AdfVerdict::NonStationary;

    [[nodiscard]] bool stationary_at(double level) const;
};

/// Strongest level whose critical value lies above the statistic.
[[nodiscard]] AdfVerdict adf_verdict(double statistic);

/// Default lag cap, floor(12 * (n / 100)^(1/4)).
[[nodiscard]] std::size_t schwert_max_lag(std::size_t n);

/**
 * Augmented Dickey-Fuller test with intercept and no trend:
 *
 *   dy_t = a + g * y_{t-1} + sum_{i=1..p} b_i * dy_{t-i} + e_t
 *
 * p is chosen by minimum AIC over 0..max_lag with every candidate fitted on the
 * same sample; the chosen regression is then refitted on all usable
 * observations. Least squares goes through a Householder QR of the design.
 *
 * Throws DegenerateInputError for a constant series, NumericalError for a
 * rank-deficient design and std::invalid_argument for series too short or
 * containing non-finite values.
 */
[[nodiscard]] AdfResult adf_test(std::span<const double> series, std::optional<std::size_t> max_lag = std::nullopt);

struct ChannelAdf {
    ChannelId channel;
    AdfResult result;
};

/// Raised by adf_report; names the channel whose test failed and keeps the
/// category of the underlying failure.
class ChannelAdfError : public NumericalError {
public:
    enum class Kind { Degenerate, Numerical, Argument };

    ChannelAdfError(ChannelId channel, Kind kind, const std::string& what)
        : NumericalError(what), channel_(channel), kind_(kind) {}
    [[nodiscard]] ChannelId channel() const noexcept { return channel_; }
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    ChannelId channel_;
    Kind kind_;
};

/// One test per channel, in the frame's channel order.
[[nodiscard]] std::vector<ChannelAdf> adf_report(const TimeSeriesFrame& frame,
                                                 std::optional<std::size_t> max_lag = std::nullopt);
[[nodiscard]] std::vector<ChannelAdf> adf_report(const DifferencedFrame& frame,
                                                 std::optional<std::size_t> max_lag = std::nullopt);

/// Table layout: a header of channel names, then rows statistic, verdict, 1%, 5%, 10%.
void write_adf_csv(std::ostream& out, std::span<const ChannelAdf> report);

}  // namespace tsad
