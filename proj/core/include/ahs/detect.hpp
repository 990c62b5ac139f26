#pragma once

#include <vector>

#include "ahs/filters.hpp"
#include "ahs/trace.hpp"

namespace ahs {

// Robust noise floor: median(|x - median(x)|) / 0.6745, in the trace's unit.
// Needs at least 100 samples.
double estimate_noise_sigma(const ChannelTrace& t);

// Two-pass variant for spike-carrying channels: a first MAD pass flags
// samples beyond mask_sigmas (with a margin around them), a second pass
// re-estimates on what is left. Dense large spikes inflate the single-pass
// MAD by >10%, which loosens every derived threshold.
double estimate_noise_sigma_masked(const ChannelTrace& t, double mask_sigmas = 4.0,
                                   double mask_margin_s = 0.0005);

// Per-channel normalization; output unit is sigmas.
ChannelTrace whiten(const ChannelTrace& t, double sigma);

// Negative-going threshold crossing. One event per excursion, timed at its
// most negative sample; an excursion opens below the threshold and closes
// when the signal recovers above half of it (hysteresis keeps marginal
// excursions in one piece under noise). Crossings starting within
// dead_time_s of the last emitted event are suppressed. The 1.7 ms default
// sits between the band-pass ring-back of large spikes (re-crosses the
// threshold 1.0-1.4 ms after the trough) and the excursion lead of a
// following spike at the generators' 3 ms separation floor (~2.5 ms).
std::vector<SpikeEvent> detect_spikes(const ChannelTrace& t, double threshold,
                                      double dead_time_s = 0.0017);

struct PipelineSettings {
    BandpassSpec band{};
    double dead_time_s = 0.0017;
};

struct ConditionResult {
    std::vector<SpikeEvent> events;  // peaks in µV
    double noise_sigma_uv = 0.0;     // MAD sigma of the filtered channel
    bool band_clamped = false;
    BandpassSpec band{};
};

// The on-chip conditioning chain: band-pass (band clamped to the channel
// rate when needed), noise estimation, whitening, threshold detection.
// threshold_uv is expressed on the filtered signal and must be negative.
ConditionResult condition_and_detect(const ChannelTrace& raw_uv, double threshold_uv,
                                     const PipelineSettings& ps = {});

// Response of the conditioning filter to the template: trough magnitude and
// the magnitude of the deepest negative lobe after the trough recovers (the
// ring-back a threshold must clear). With a positive target_rate_hz the
// template is band-limited and re-gridded to that rate first, mirroring what
// the acquisition path does to a real spike.
struct TemplateResponse {
    double peak = 0.0;  // trough magnitude, µV
    double ring = 0.0;  // post-recovery negative lobe magnitude, µV
};
TemplateResponse filtered_template_response(const SpikeTemplate& tmpl,
                                            const BandpassSpec& band = {},
                                            double target_rate_hz = 0.0);

// Trough magnitude only; the reference scale for template-anchored thresholds.
double filtered_template_peak(const SpikeTemplate& tmpl, const BandpassSpec& band = {},
                              double target_rate_hz = 0.0);

// Template-anchored threshold placed a fraction of the way up the corridor
// between the ring lobe and the trough, where neither spikes nor ring-backs
// sit near it. Negative µV.
inline double corridor_threshold_uv(const TemplateResponse& resp, double fraction) {
    return -(resp.ring + fraction * (resp.peak - resp.ring));
}

}  // namespace ahs
