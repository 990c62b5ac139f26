#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahs/trace.hpp"

namespace ahs {

// Master clock and command schedule of the ADC interface.
struct ClockPlan {
    double f_clk_hz = 24e6;
    std::uint32_t n_total = 800;    // clock cycles per execution round
    std::uint32_t n_sampling = 1;   // active sampling cycles per round

    double r_max_hz() const { return n_sampling * f_clk_hz / n_total; }
    void validate() const;
};

double compute_r_max(const ClockPlan& plan);

// Supported integer downsampling factors; always contains 1.
struct FactorSet {
    std::vector<int> factors;

    static FactorSet defaults() { return FactorSet{{1, 2, 3, 4, 5, 6, 8, 10}}; }
    bool contains(int x) const;
    int max_factor() const;
    void validate() const;
};

struct TargetRateExceedsMax : std::runtime_error {
    explicit TargetRateExceedsMax(const std::string& what) : std::runtime_error(what) {}
};

// Largest factor whose realized rate r_max/x still meets the target.
int select_factor(double target_rate_hz, double r_max_hz, const FactorSet& factors);

// A round's sampling command fires iff round_index mod factor == 0.
inline bool round_gate(std::uint64_t round_index, int factor) {
    return round_index % static_cast<std::uint64_t>(factor) == 0;
}

struct ElectrodeSchedule {
    int electrode_id = 0;
    double target_rate_hz = 0.0;
    int factor = 1;
    double realized_rate_hz = 0.0;
    double threshold_uv = 0.0;
    bool flagged = false;  // budget infeasible, pinned to full rate
};

struct ChannelCost {
    int channel_id = 0;
    int factor = 1;
    std::uint64_t executed = 0;
    std::uint64_t skipped = 0;
};

struct AcquisitionCost {
    std::vector<ChannelCost> per_channel;

    std::uint64_t total_executed() const;
    std::uint64_t total_rounds() const;
};

struct AcquireResult {
    NeuralTrace trace;  // heterogeneous per-channel rates
    AcquisitionCost cost;
};

// Gated acquisition: skipped rounds are never digitized. Each output channel
// is the band-limited re-digitization of the source channel on its gated
// sample grid; executed counts are exact (ceil(T/x) over T rounds).
AcquireResult acquire(const NeuralTrace& full_rate, const std::vector<ElectrodeSchedule>& schedules,
                      const ClockPlan& plan);

void write_cost_csv(const AcquisitionCost& cost, const std::string& path);

}  // namespace ahs
