#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ahs/evaluation.hpp"
#include "ahs/rng.hpp"
#include "ahs/trace.hpp"

namespace ahs {

struct TemplateParams {
    double peak_uv = 100.0;        // trough magnitude
    double trough_width_ms = 0.5;  // FWHM of the negative lobe
    double rebound_ratio = 0.35;   // positive lobe height relative to trough
    double rebound_width_ms = 0.8;
    double rebound_delay_ms = 0.6;
};

// Biphasic waveform with the trough centered on the template window.
SpikeTemplate make_biphasic_template(int electrode_id, const TemplateParams& params,
                                     double base_rate_hz = 30000.0);

// Amplitude ladder (geometric between amp_min and amp_max) with seeded shape
// variation; one template per electrode.
std::vector<SpikeTemplate> make_template_bank(std::size_t n, std::uint64_t seed,
                                              double amp_min_uv = 20.0, double amp_max_uv = 400.0,
                                              double base_rate_hz = 30000.0);

struct SynthConfig {
    std::size_t n_electrodes = 32;
    double duration_s = 10.0;
    double base_rate_hz = 30000.0;
    double noise_sigma_uv = 5.0;
    double firing_rate_hz = 20.0;
    double uv_per_count = 0.195;
    double amp_min_uv = 20.0;
    double amp_max_uv = 400.0;
    std::size_t n_shared_neurons = 4;  // neurons also visible on the next electrode
    double shared_weight = 0.6;
    double min_separation_s = 0.003;
};

struct SessionDataset {
    SynthConfig config;
    std::uint64_t seed = 0;
    NeuralTrace trace;  // full rate
    std::vector<SpikeTemplate> templates;
    std::vector<NeuronSpikeTrain> trains;

    ElectrodeGroundTruth ground_truth(int electrode_id, double merge_window_s = 0.0005) const {
        return project_ground_truth(trains, electrode_id, merge_window_s);
    }
};

// Poisson spike times with a refractory floor, inside [margin, T - margin].
std::vector<double> draw_spike_times(double duration_s, double rate_hz, double min_separation_s,
                                     double margin_s, Rng& rng);

SessionDataset synthesize_dataset(const SynthConfig& config, std::uint64_t seed);

// Write trace + sidecar + ground truth + templates under out_dir with fixed
// names (trace.bin, trace.json, ground_truth.json, templates.json).
void write_dataset(const SessionDataset& ds, const std::string& out_dir);
SessionDataset read_dataset(const std::string& dir);

}  // namespace ahs
