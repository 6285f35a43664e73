#pragma once

#include <cstddef>
#include <cstdint>

#include "tsad/dataset.hpp"

namespace tsad {

/**
 * Parameters of a simulated drinking-water monitoring record: nine channels at
 * a fixed cadence with slow drift, sensor noise and labelled contamination
 * episodes. Episodes raise the noise of the chemistry channels and make Redox,
 * turbidity and chlorine drift, so they are visible in first differences.
 */
struct SyntheticSpec {
    std::size_t rows = 20000;
    Duration cadence = std::chrono::minutes(1);
    Timestamp start = from_unix_nanos(1'455'494'400'000'000'000);  // 2016-02-15 00:00:00
    double event_fraction = 0.0142;
    std::size_t min_event_length = 5;
    std::size_t max_event_length = 60;
    /// Noise multiplier inside episodes.
    double event_noise_scale = 6.0;
    /// Per-step drift inside episodes, in units of the channel's noise level.
    /// Redox and turbidity rise, chlorine falls.
    double event_drift = 1.5;
    /// Independent probability that a cell is missing.
    double missing_rate = 0.0;
    /// Probability per row of an isolated single-channel spike outside episodes.
    double glitch_rate = 0.001;
    std::uint64_t seed = 1;
};

[[nodiscard]] TimeSeriesFrame synthetic_water_frame(const SyntheticSpec& spec);

}  // namespace tsad
