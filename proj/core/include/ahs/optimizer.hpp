#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ahs/acquisition.hpp"
#include "ahs/mlp.hpp"

namespace ahs {

struct OptimizerSettings {
    double epsilon = 0.05;
    FactorSet factor_set = FactorSet::defaults();
    // noise-anchored candidates, in sigmas
    std::vector<double> threshold_grid_sigmas = {-5.0, -5.5};
    // template-anchored candidates, placed inside the corridor between the
    // filtered template's ring lobe and its trough; these let strong
    // electrodes clear both the noise floor and the filter's ring-back
    std::vector<double> corridor_fractions = {0.35, 0.6};
    double corridor_floor_sigmas = -5.0;  // corridor candidates clamp to this

    void validate() const;
};

inline double total_error(const ErrorEstimate& est) { return est.fnr + est.fpr; }

// Exhaustive factor x threshold search: among predicted-feasible pairs pick
// the largest factor (lowest realized rate), then the lowest predicted total
// error, then the strictest threshold. Falls back to factor 1, flagged, when
// nothing fits the budget. noise_sigma_uv is the electrode's filtered
// full-rate noise floor; it converts the sigma grid to µV thresholds.
ElectrodeSchedule optimize_electrode(const SpikeTemplate& tmpl, double noise_sigma_uv,
                                     const MlpModel& model, const OptimizerSettings& settings,
                                     const ClockPlan& plan);

struct ConfigVector {
    std::vector<ElectrodeSchedule> schedules;
    std::uint16_t epoch = 0;
};

ConfigVector optimize_array(std::span<const SpikeTemplate> templates,
                            std::span<const double> noise_sigmas_uv, const MlpModel& model,
                            const OptimizerSettings& settings, const ClockPlan& plan);

void write_config_text(const ConfigVector& config, const std::string& path);
ConfigVector read_config_text(const std::string& path);

}  // namespace ahs
