#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ahs/acquisition.hpp"
#include "ahs/detect.hpp"
#include "ahs/mlp.hpp"
#include "ahs/trace.hpp"

namespace ahs {

struct GenSettings {
    double base_rate_hz = 30000.0;
    double duration_s = 10.0;
    double min_separation_s = 0.003;
    FactorSet factor_set = FactorSet::defaults();
    PipelineSettings pipeline{};
    double match_window_s = 0.0005;
};

// One labelled sample: drop the template into seeded Gaussian noise, run the
// acquisition + detection pipeline at the candidate (factor, threshold), and
// measure FNR/FPR against the known insertion times.
TrainingSample generate_training_sample(const SpikeTemplate& tmpl, int factor, double threshold_uv,
                                        double noise_sigma_uv, double firing_rate_hz,
                                        std::uint64_t seed, const GenSettings& gs = {});

// Threshold candidates come in two flavours: anchored on the noise floor
// (multiples of sigma) and anchored on the corridor between the template's
// filtered ring lobe and its trough. The second kind lets strong electrodes
// sit their threshold where neither noise, ring-backs nor spikes reach,
// which a pure sigma grid cannot.
struct CandidateGrid {
    std::vector<int> factors;
    std::vector<double> thresholds_sigma;      // negative
    std::vector<double> corridor_fractions;    // in (0, 1)
    double corridor_floor_sigmas = -5.0;       // corridor candidates clamp to this

    static CandidateGrid defaults();
    std::size_t n_thresholds() const {
        return thresholds_sigma.size() + corridor_fractions.size();
    }
};

struct Dataset {
    std::vector<TrainingSample> train;
    std::vector<TrainingSample> test;
};

struct BuildSettings {
    double noise_sigma_uv = 5.0;
    double firing_rate_hz = 20.0;
    GenSettings gen{};
};

// n_samples drawn uniformly over templates x grid with per-sample noise
// seeds; deterministic 80/20 split by seeded shuffle.
Dataset build_dataset(const std::vector<SpikeTemplate>& templates, const CandidateGrid& grid,
                      std::size_t n_samples, std::uint64_t seed, const BuildSettings& bs = {});

// Scalar features and targets per row; template shape omitted.
void write_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace ahs
