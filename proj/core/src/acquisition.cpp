#include "ahs/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ahs/parallel.hpp"
#include "ahs/resample.hpp"

namespace ahs {

void ClockPlan::validate() const {
    if (!(f_clk_hz > 0.0)) throw std::invalid_argument("ClockPlan: f_clk must be > 0");
    if (n_total == 0 || n_sampling == 0) throw std::invalid_argument("ClockPlan: cycle counts must be > 0");
    if (n_sampling > n_total) throw std::invalid_argument("ClockPlan: n_sampling > n_total");
}

double compute_r_max(const ClockPlan& plan) {
    plan.validate();
    return plan.r_max_hz();
}

bool FactorSet::contains(int x) const {
    return std::find(factors.begin(), factors.end(), x) != factors.end();
}

int FactorSet::max_factor() const { return factors.empty() ? 0 : factors.back(); }

void FactorSet::validate() const {
    if (factors.empty()) throw std::invalid_argument("FactorSet: empty");
    if (!std::is_sorted(factors.begin(), factors.end())) {
        throw std::invalid_argument("FactorSet: must be ascending");
    }
    if (std::adjacent_find(factors.begin(), factors.end()) != factors.end()) {
        throw std::invalid_argument("FactorSet: duplicate factor");
    }
    if (factors.front() < 1) throw std::invalid_argument("FactorSet: factors must be positive");
    if (!contains(1)) throw std::invalid_argument("FactorSet: must contain 1");
}

int select_factor(double target_rate_hz, double r_max_hz, const FactorSet& factors) {
    if (!(target_rate_hz > 0.0)) throw std::invalid_argument("select_factor: target must be > 0");
    factors.validate();
    int best = 0;
    for (int x : factors.factors) {
        if (r_max_hz / x >= target_rate_hz) best = std::max(best, x);
    }
    if (best == 0) {
        throw TargetRateExceedsMax("select_factor: target rate above r_max");
    }
    return best;
}

std::uint64_t AcquisitionCost::total_executed() const {
    std::uint64_t n = 0;
    for (const auto& c : per_channel) n += c.executed;
    return n;
}

std::uint64_t AcquisitionCost::total_rounds() const {
    std::uint64_t n = 0;
    for (const auto& c : per_channel) n += c.executed + c.skipped;
    return n;
}

AcquireResult acquire(const NeuralTrace& full_rate, const std::vector<ElectrodeSchedule>& schedules,
                      const ClockPlan& plan) {
    full_rate.validate();
    plan.validate();
    if (schedules.size() != full_rate.n_channels()) {
        throw std::invalid_argument("acquire: one schedule per channel required");
    }
    const double r_max = plan.r_max_hz();
    for (std::size_t c = 0; c < full_rate.n_channels(); ++c) {
        if (std::abs(full_rate.rates_hz[c] - r_max) > 1e-6 * r_max) {
            throw std::invalid_argument("acquire: full-rate trace must run at r_max");
        }
        if (full_rate.index_of(schedules[c].electrode_id) < 0) {
            throw std::invalid_argument("acquire: schedule references unknown channel");
        }
        if (schedules[c].factor < 1) throw std::invalid_argument("acquire: factor must be >= 1");
    }

    AcquireResult out;
    out.trace.uv_per_count = full_rate.uv_per_count;
    out.trace.channel_ids.resize(schedules.size());
    out.trace.rates_hz.resize(schedules.size());
    out.trace.counts.resize(schedules.size());
    out.cost.per_channel.resize(schedules.size());

    parallel_for(schedules.size(), [&](std::size_t s) {
        const ElectrodeSchedule& sched = schedules[s];
        const auto src_idx = static_cast<std::size_t>(full_rate.index_of(sched.electrode_id));
        const std::uint64_t rounds = full_rate.counts[src_idx].size();
        const auto x = static_cast<std::uint64_t>(sched.factor);
        const std::uint64_t executed = (rounds + x - 1) / x;  // rounds 0, x, 2x, ...

        ChannelCost cost;
        cost.channel_id = sched.electrode_id;
        cost.factor = sched.factor;
        cost.executed = executed;
        cost.skipped = rounds - executed;
        out.cost.per_channel[s] = cost;

        const double realized = r_max / sched.factor;
        out.trace.channel_ids[s] = sched.electrode_id;
        out.trace.rates_hz[s] = realized;
        if (sched.factor == 1) {
            out.trace.counts[s] = full_rate.counts[src_idx];
            return;
        }
        const ChannelTrace uv = full_rate.channel_uv(src_idx);
        const ChannelTrace res = resample_channel_n(uv, realized, executed);
        auto& counts = out.trace.counts[s];
        counts.reserve(res.samples.size());
        for (double v : res.samples) counts.push_back(quantize_count(v, full_rate.uv_per_count));
    });
    return out;
}

void write_cost_csv(const AcquisitionCost& cost, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_cost_csv: cannot open " + path);
    out << "channel_id,factor,executed,skipped\n";
    for (const auto& c : cost.per_channel) {
        out << c.channel_id << "," << c.factor << "," << c.executed << "," << c.skipped << "\n";
    }
}

}  // namespace ahs
