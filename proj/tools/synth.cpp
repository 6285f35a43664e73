// Writes a simulated water-quality CSV in the layout `tsad clean` expects.
#include <iostream>

#include <CLI11.hpp>

#include "tsad/synthetic.hpp"

int main(int argc, char** argv) {
    tsad::SyntheticSpec spec;
    std::string out_path;
    std::size_t minutes = 1;

    CLI::App app{"Simulated water-quality record with labelled contamination episodes", "tsad_synth"};
    app.add_option("--out,-o", out_path, "CSV to write")->required();
    app.add_option("--rows", spec.rows, "number of rows")->capture_default_str();
    app.add_option("--cadence-minutes", minutes, "minutes between rows")->capture_default_str();
    app.add_option("--event-fraction", spec.event_fraction, "share of rows inside episodes")->capture_default_str();
    app.add_option("--event-noise", spec.event_noise_scale, "noise multiplier inside episodes")
        ->capture_default_str();
    app.add_option("--event-drift", spec.event_drift, "per-step episode drift in noise units")
        ->capture_default_str();
    app.add_option("--missing-rate", spec.missing_rate, "probability that a cell is blank")->capture_default_str();
    app.add_option("--seed", spec.seed, "generator seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    spec.cadence = std::chrono::minutes(minutes);
    try {
        const auto frame = tsad::synthetic_water_frame(spec);
        tsad::write_csv(out_path, frame);
        std::cout << "wrote " << out_path << ": " << frame.rows() << " rows, " << frame.positive_count()
                  << " events\n";
    } catch (const std::exception& e) {
        std::cerr << "tsad_synth: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
