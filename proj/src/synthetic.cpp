#include "tsad/synthetic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tsad/random.hpp"

namespace tsad {
namespace {

struct ChannelProfile {
    double level;
    double daily_amplitude;
    double drift_sigma;  // innovation of the mean-reverting drift
    double noise_sigma;
    bool reacts;         // noise inflates during episodes
    double drift_sign;   // direction of the episode drift, 0 for none
};

// Order follows kAllChannels.
constexpr ChannelProfile kProfiles[kChannelCount] = {
    {8.3, 0.25, 0.004, 0.010, false, 0.0},      // Tp
    {0.14, 0.004, 0.0002, 0.0015, true, -1.0},  // Cl
    {8.35, 0.01, 0.0005, 0.004, true, 0.0},     // pH
    {750.0, 2.0, 0.05, 0.5, true, 1.0},         // Redox
    {190.0, 1.5, 0.05, 0.3, true, 0.0},         // Leit
    {0.025, 0.002, 0.0002, 0.002, true, 1.0},   // Trueb
    {0.12, 0.004, 0.0002, 0.0015, true, -1.0},  // Cl_2
    {1200.0, 150.0, 2.0, 8.0, false, 0.0},      // Fm
    {1150.0, 140.0, 2.0, 8.0, false, 0.0},      // Fm_2
};

constexpr double kDriftPersistence = 0.995;

}  // namespace

TimeSeriesFrame synthetic_water_frame(const SyntheticSpec& spec) {
    if (spec.cadence <= Duration::zero()) throw std::invalid_argument("cadence must be positive");
    if (spec.min_event_length == 0 || spec.max_event_length < spec.min_event_length) {
        throw std::invalid_argument("event length range is empty");
    }
    if (!(spec.event_fraction >= 0.0 && spec.event_fraction < 1.0)) {
        throw std::invalid_argument("event_fraction must lie in [0, 1)");
    }

    const std::size_t n = spec.rows;
    auto rng = make_rng(spec.seed, {0x57a7e});
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Episode layout: a renewal process whose start probability gives the requested fraction.
    Labels labels(n, 0);
    const double mean_len = 0.5 * static_cast<double>(spec.min_event_length + spec.max_event_length);
    const double start_p =
        spec.event_fraction > 0.0 ? spec.event_fraction / (mean_len * (1.0 - spec.event_fraction)) : 0.0;
    std::uniform_int_distribution<std::size_t> length_dist(spec.min_event_length, spec.max_event_length);
    for (std::size_t r = 0; r < n;) {
        if (uniform_unit(rng) < start_p) {
            const std::size_t len = length_dist(rng);
            for (std::size_t k = 0; k < len && r < n; ++k) labels[r++] = 1;
            ++r;  // keep episodes apart
        } else {
            ++r;
        }
    }

    std::vector<Timestamp> times(n);
    for (std::size_t r = 0; r < n; ++r) times[r] = spec.start + spec.cadence * static_cast<std::int64_t>(r);

    const double day = static_cast<double>(std::chrono::duration_cast<Duration>(std::chrono::hours(24)).count());
    std::vector<std::vector<double>> values(kChannelCount, std::vector<double>(n));
    for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto& p = kProfiles[c];
        double drift = 0.0;
        double episode_shift = 0.0;
        const double phase = 2.0 * std::numbers::pi * uniform_unit(rng);
        for (std::size_t r = 0; r < n; ++r) {
            drift = kDriftPersistence * drift + p.drift_sigma * gauss(rng);
            const double t = static_cast<double>((times[r] - spec.start).count()) / day;
            double sigma = p.noise_sigma;
            if (labels[r] && p.reacts) sigma *= spec.event_noise_scale;
            if (p.drift_sign != 0.0) {
                // Drift accumulates during an episode and relaxes afterwards.
                episode_shift = labels[r] ? episode_shift + p.drift_sign * spec.event_drift * p.noise_sigma
                                          : 0.9 * episode_shift;
            }
            values[c][r] = p.level + p.daily_amplitude * std::sin(2.0 * std::numbers::pi * t + phase) + drift +
                           episode_shift + sigma * gauss(rng);
        }
    }

    std::uniform_int_distribution<std::size_t> channel_dist(0, kChannelCount - 1);
    for (std::size_t r = 0; r < n; ++r) {
        if (!labels[r] && uniform_unit(rng) < spec.glitch_rate) {
            const std::size_t c = channel_dist(rng);
            values[c][r] += (uniform_unit(rng) < 0.5 ? -1.0 : 1.0) * 8.0 * kProfiles[c].noise_sigma;
        }
    }
    if (spec.missing_rate > 0.0) {
        for (auto& col : values) {
            for (std::size_t r = 1; r < n; ++r) {
                if (uniform_unit(rng) < spec.missing_rate) col[r] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }

    return TimeSeriesFrame(std::move(times), {kAllChannels.begin(), kAllChannels.end()}, std::move(values),
                           std::move(labels));
}

}  // namespace tsad
