#include "ahs/detect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ahs/resample.hpp"

namespace ahs {

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                         v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

}  // namespace

double estimate_noise_sigma(const ChannelTrace& t) {
    if (t.samples.size() < 100) {
        throw std::invalid_argument("estimate_noise_sigma: need at least 100 samples");
    }
    std::vector<double> work = t.samples;
    const double med = median_inplace(work);
    for (auto& v : work) v = std::abs(v - med);
    return median_inplace(work) / 0.6745;
}

double estimate_noise_sigma_masked(const ChannelTrace& t, double mask_sigmas,
                                   double mask_margin_s) {
    const double sigma0 = estimate_noise_sigma(t);
    if (sigma0 <= 0.0) return sigma0;
    const auto margin = static_cast<std::ptrdiff_t>(std::ceil(mask_margin_s * t.sample_rate_hz));
    const double limit = mask_sigmas * sigma0;
    const auto n = static_cast<std::ptrdiff_t>(t.samples.size());

    std::vector<bool> masked(t.samples.size(), false);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (std::abs(t.samples[static_cast<std::size_t>(i)]) <= limit) continue;
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - margin);
        const std::ptrdiff_t hi = std::min(n, i + margin + 1);
        for (std::ptrdiff_t k = lo; k < hi; ++k) masked[static_cast<std::size_t>(k)] = true;
    }
    ChannelTrace clean;
    clean.channel_id = t.channel_id;
    clean.sample_rate_hz = t.sample_rate_hz;
    clean.samples.reserve(t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        if (!masked[i]) clean.samples.push_back(t.samples[i]);
    }
    if (clean.samples.size() < 100) return sigma0;  // nearly everything masked
    return estimate_noise_sigma(clean);
}

ChannelTrace whiten(const ChannelTrace& t, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("whiten: sigma must be > 0");
    ChannelTrace out = t;
    for (auto& v : out.samples) v /= sigma;
    return out;
}

std::vector<SpikeEvent> detect_spikes(const ChannelTrace& t, double threshold,
                                      double dead_time_s) {
    if (!(threshold < 0.0)) throw std::invalid_argument("detect_spikes: threshold must be negative");
    if (dead_time_s < 0.0) throw std::invalid_argument("detect_spikes: dead time must be >= 0");
    if (!(t.sample_rate_hz > 0.0)) throw std::invalid_argument("detect_spikes: invalid sample rate");

    std::vector<SpikeEvent> events;
    const auto& x = t.samples;
    const double dt = 1.0 / t.sample_rate_hz;
    // an excursion opens below the threshold and closes only once the signal
    // recovers above half of it; without the hysteresis, noise fragments a
    // marginal excursion into pieces that re-arm after the dead time
    const double release = 0.5 * threshold;
    double last_emitted = -1.0;
    std::size_t i = 0;
    while (i < x.size()) {
        if (x[i] >= threshold) {
            ++i;
            continue;
        }
        const double excursion_start = static_cast<double>(i) * dt;
        std::size_t peak = i;
        while (i < x.size() && x[i] < release) {
            if (x[i] < x[peak]) peak = i;
            ++i;
        }
        if (last_emitted >= 0.0 && excursion_start - last_emitted < dead_time_s) continue;
        SpikeEvent ev;
        ev.electrode_id = t.channel_id;
        ev.time_s = static_cast<double>(peak) * dt;
        ev.peak_uv = x[peak];
        events.push_back(ev);
        last_emitted = ev.time_s;
    }
    return events;
}

TemplateResponse filtered_template_response(const SpikeTemplate& tmpl, const BandpassSpec& band,
                                            double target_rate_hz) {
    // embed in silence so the causal filter settles before and rings after
    ChannelTrace probe;
    probe.sample_rate_hz = tmpl.base_rate_hz;
    probe.samples.assign(8 * kTemplateLength, 0.0);
    const std::size_t at = 2 * kTemplateLength;
    for (std::size_t k = 0; k < tmpl.waveform_uv.size(); ++k) {
        probe.samples[at + k] = tmpl.waveform_uv[k];
    }
    if (target_rate_hz > 0.0 && target_rate_hz < tmpl.base_rate_hz) {
        probe = resample_channel(probe, target_rate_hz);
    }
    const BandpassSpec clamped = clamp_band(band, probe.sample_rate_hz, nullptr);
    const auto filtered = BandpassFilter(probe.sample_rate_hz, clamped).process(probe.samples);

    TemplateResponse res;
    std::size_t trough = 0;
    for (std::size_t i = 0; i < filtered.size(); ++i) {
        if (-filtered[i] > res.peak) {
            res.peak = -filtered[i];
            trough = i;
        }
    }
    bool recovered = false;
    for (std::size_t i = trough; i < filtered.size(); ++i) {
        if (!recovered) {
            recovered = filtered[i] >= 0.0;
            continue;
        }
        res.ring = std::max(res.ring, -filtered[i]);
    }
    return res;
}

double filtered_template_peak(const SpikeTemplate& tmpl, const BandpassSpec& band,
                              double target_rate_hz) {
    return filtered_template_response(tmpl, band, target_rate_hz).peak;
}

ConditionResult condition_and_detect(const ChannelTrace& raw_uv, double threshold_uv,
                                     const PipelineSettings& ps) {
    if (!(threshold_uv < 0.0)) {
        throw std::invalid_argument("condition_and_detect: threshold must be negative");
    }
    ConditionResult res;
    res.band = clamp_band(ps.band, raw_uv.sample_rate_hz, &res.band_clamped);
    const BandpassFilter filter(raw_uv.sample_rate_hz, res.band);
    const ChannelTrace filtered = filter.process(raw_uv);
    res.noise_sigma_uv = estimate_noise_sigma_masked(filtered);
    if (!(res.noise_sigma_uv > 0.0)) {
        // a dead channel can't cross a negative threshold anyway
        return res;
    }
    const ChannelTrace normalized = whiten(filtered, res.noise_sigma_uv);
    const double threshold_sigmas = threshold_uv / res.noise_sigma_uv;
    res.events = detect_spikes(normalized, threshold_sigmas, ps.dead_time_s);
    for (auto& ev : res.events) ev.peak_uv *= res.noise_sigma_uv;  // back to µV
    return res;
}

}  // namespace ahs
