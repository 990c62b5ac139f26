#pragma once

#include <string>
#include <vector>

#include "ahs/cs.hpp"
#include "ahs/dct.hpp"
#include "ahs/detect.hpp"
#include "ahs/evaluation.hpp"
#include "ahs/optimizer.hpp"
#include "ahs/synth.hpp"

namespace ahs {

// Per-electrode filtered full-rate noise floors; the calibration quantity
// shared by the optimizer, uniform allocations and baseline thresholds.
std::vector<double> measure_noise_sigmas(const SessionDataset& dataset,
                                         const PipelineSettings& pipeline = {});

struct AllocationEval {
    std::vector<DetectionReport> reports;  // per channel
    AcquisitionCost cost;
    double cr_acquisition = 1.0;
    double mean_fnr = 0.0;
    double mean_fpr = 0.0;
    double mean_sde = 0.0;
    std::uint64_t n_detected = 0;
};

// Acquire under the given schedules, run the detection chain per channel and
// score against the dataset's ground truth.
AllocationEval evaluate_allocation(const SessionDataset& dataset,
                                   const std::vector<ElectrodeSchedule>& schedules,
                                   const ClockPlan& plan, const PipelineSettings& pipeline = {},
                                   double match_window_s = 0.0005);

// Signal-blind comparator: the same factor everywhere, noise-based µV
// thresholds at threshold_sigma.
std::vector<ElectrodeSchedule> uniform_allocation(const SessionDataset& dataset, int factor,
                                                  double threshold_sigma, const ClockPlan& plan,
                                                  const PipelineSettings& pipeline = {});

struct SchemeSet {
    bool adaptive = true;
    bool dct = true;
    bool cs = true;
};

struct ComparisonSettings {
    OptimizerSettings optimizer{};
    PipelineSettings pipeline{};
    ClockPlan plan{};
    double match_window_s = 0.0005;
    double baseline_threshold_sigma = -4.0;
    std::vector<DctConfig> dct_sweep = {{128, 8}, {128, 16}, {128, 32}};
    std::vector<CsConfig> cs_sweep = {{128, 16, 7, 4}, {128, 32, 7, 8}, {128, 64, 7, 16}};
};

struct ComparisonRow {
    std::string scheme;
    std::string config;
    double cr_acq = 1.0;
    double cr_tx = 1.0;
    double fnr = 0.0;
    double fpr = 0.0;
    double sde = 0.0;
    std::uint64_t executed_adc_samples = 0;
    std::uint64_t compress_mults = 0;  // headstage-side multiply count
};

// End-to-end comparison of the adaptive scheme against the digitize-then-
// compress baselines, identical detection machinery on every output.
std::vector<ComparisonRow> run_comparison(const SessionDataset& dataset, const MlpModel& model,
                                          const SchemeSet& schemes,
                                          const ComparisonSettings& settings);

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path);

}  // namespace ahs
