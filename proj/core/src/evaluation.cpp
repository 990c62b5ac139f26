#include "ahs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ahs/rng.hpp"

namespace ahs {

ElectrodeGroundTruth project_ground_truth(const std::vector<NeuronSpikeTrain>& trains,
                                          int electrode_id, double merge_window_s) {
    ElectrodeGroundTruth out;
    out.electrode_id = electrode_id;
    std::vector<double> times;
    for (const auto& train : trains) {
        if (std::find(train.footprint.begin(), train.footprint.end(), electrode_id) ==
            train.footprint.end()) {
            continue;
        }
        times.insert(times.end(), train.spike_times_s.begin(), train.spike_times_s.end());
    }
    std::sort(times.begin(), times.end());
    // anchor-based merge: a cluster is represented by its first time, so long
    // chains cannot creep arbitrarily far
    for (double t : times) {
        if (!out.event_times_s.empty() && t - out.event_times_s.back() <= merge_window_s) continue;
        out.event_times_s.push_back(t);
    }
    return out;
}

DetectionReport match_events(const ElectrodeGroundTruth& truth,
                             const std::vector<SpikeEvent>& detected, double window_s) {
    if (!(window_s > 0.0)) throw std::invalid_argument("match_events: window must be > 0");

    std::vector<SpikeEvent> dets = detected;
    std::sort(dets.begin(), dets.end(),
              [](const SpikeEvent& a, const SpikeEvent& b) { return a.time_s < b.time_s; });

    const auto& gt = truth.event_times_s;
    std::vector<bool> used(gt.size(), false);
    std::uint64_t matched = 0;
    for (const auto& det : dets) {
        const double t = det.time_s;
        auto it = std::lower_bound(gt.begin(), gt.end(), t);
        auto idx = static_cast<std::ptrdiff_t>(it - gt.begin());
        // nearest unmatched candidate scanning outward from the insertion point
        std::ptrdiff_t best = -1;
        double best_dist = window_s;
        for (std::ptrdiff_t j = idx; j < static_cast<std::ptrdiff_t>(gt.size()); ++j) {
            const double d = std::abs(gt[static_cast<std::size_t>(j)] - t);
            if (d > best_dist) break;
            if (!used[static_cast<std::size_t>(j)] && d <= best_dist) {
                best_dist = d;
                best = j;
                break;
            }
        }
        for (std::ptrdiff_t j = idx - 1; j >= 0; --j) {
            const double d = std::abs(gt[static_cast<std::size_t>(j)] - t);
            if (d > best_dist) break;
            if (!used[static_cast<std::size_t>(j)] && d < best_dist) {
                best_dist = d;
                best = j;
                break;
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            ++matched;
        }
    }

    DetectionReport rep;
    rep.n_true = gt.size();
    rep.n_detected = dets.size();
    rep.n_matched = matched;
    const double denom = std::max<std::uint64_t>(rep.n_true, 1);
    rep.fnr = static_cast<double>(rep.n_true - rep.n_matched) / denom;
    rep.fpr = std::min(1.0, static_cast<double>(rep.n_detected - rep.n_matched) / denom);
    rep.sde = rep.fnr + rep.fpr;
    return rep;
}

double acquisition_compression_ratio(const AcquisitionCost& cost) {
    const std::uint64_t executed = cost.total_executed();
    if (executed == 0) throw std::invalid_argument("compression ratio: zero executed samples");
    return static_cast<double>(cost.total_rounds()) / static_cast<double>(executed);
}

double transmission_compression_ratio(std::uint64_t full_rate_bits,
                                      std::uint64_t transmitted_bits) {
    if (transmitted_bits == 0) throw std::invalid_argument("compression ratio: zero transmitted bits");
    return static_cast<double>(full_rate_bits) / static_cast<double>(transmitted_bits);
}

std::vector<std::uint8_t> inject_errors(const std::vector<std::uint8_t>& truth_train, double fnr,
                                        double fpr, std::uint64_t seed) {
    if (fnr < 0.0 || fnr > 1.0 || fpr < 0.0 || fpr > 1.0) {
        throw std::invalid_argument("inject_errors: rates must lie in [0, 1]");
    }
    std::uint64_t n_true = 0;
    for (auto v : truth_train) n_true += (v != 0);
    const std::uint64_t n_idle = truth_train.size() - n_true;
    const double p_insert =
        n_idle > 0 ? std::min(1.0, fpr * static_cast<double>(n_true) / static_cast<double>(n_idle))
                   : 0.0;

    Rng rng(seed);
    std::vector<std::uint8_t> out(truth_train.size());
    for (std::size_t i = 0; i < truth_train.size(); ++i) {
        if (truth_train[i] != 0) {
            out[i] = rng.uniform() < fnr ? 0 : 1;
        } else {
            out[i] = rng.uniform() < p_insert ? 1 : 0;
        }
    }
    return out;
}

}  // namespace ahs
