#pragma once

#include <cstdint>
#include <vector>

#include "ahs/acquisition.hpp"
#include "ahs/trace.hpp"

namespace ahs {

struct NeuronSpikeTrain {
    int neuron_id = 0;
    std::vector<double> spike_times_s;  // ascending
    std::vector<int> footprint;         // electrodes where the waveform clears the noise floor
};

struct ElectrodeGroundTruth {
    int electrode_id = 0;
    std::vector<double> event_times_s;  // ascending, merged
};

struct DetectionReport {
    std::uint64_t n_true = 0;
    std::uint64_t n_detected = 0;
    std::uint64_t n_matched = 0;
    double fnr = 0.0;
    double fpr = 0.0;  // spurious per true count, capped at 1
    double sde = 0.0;
};

// Union of all neurons covering the electrode; events closer than the merge
// window collapse into one (simultaneous spikes are a single detection).
ElectrodeGroundTruth project_ground_truth(const std::vector<NeuronSpikeTrain>& trains,
                                          int electrode_id, double merge_window_s = 0.0005);

// Greedy one-to-one matching in time order: each detection takes the nearest
// unmatched truth event within ±window_s.
DetectionReport match_events(const ElectrodeGroundTruth& truth,
                             const std::vector<SpikeEvent>& detected, double window_s = 0.0005);

// full-rate samples / executed samples
double acquisition_compression_ratio(const AcquisitionCost& cost);

// full-rate payload bits / transmitted bits
double transmission_compression_ratio(std::uint64_t full_rate_bits, std::uint64_t transmitted_bits);

// Perturb a binary spike train: each 1 dropped with probability fnr; each 0
// set with a probability calibrated so the expected insertion count equals
// fpr * (number of true spikes).
std::vector<std::uint8_t> inject_errors(const std::vector<std::uint8_t>& truth_train, double fnr,
                                        double fpr, std::uint64_t seed);

}  // namespace ahs
