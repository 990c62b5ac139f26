#pragma once

#include <array>
#include <vector>

#include "ahs/trace.hpp"

namespace ahs {

struct BandpassSpec {
    double low_hz = 300.0;
    double high_hz = 3000.0;
};

// Clamp the upper cutoff to 0.45 * rate when the channel rate cannot carry
// the full band (adaptive downsampling can push Nyquist below high_hz).
// Throws if even the clamped band collapses.
BandpassSpec clamp_band(BandpassSpec spec, double sample_rate_hz, bool* clamped = nullptr);

// 4th-order Butterworth band-pass as two cascaded biquads, causal, double
// precision. Construction throws if high_hz is at or above Nyquist.
class BandpassFilter {
public:
    BandpassFilter(double sample_rate_hz, BandpassSpec spec = {});

    std::vector<double> process(const std::vector<double>& x) const;
    ChannelTrace process(const ChannelTrace& in) const;

    // |H| of the digital filter at f_hz
    double magnitude_at(double f_hz) const;
    // delay of the impulse-response magnitude peak; detection uses it to
    // report event times aligned with the unfiltered waveform
    double peak_delay_s() const;
    // sqrt(sum h^2): output sigma per unit white-noise input sigma
    double noise_gain() const;

    double sample_rate_hz() const { return fs_; }
    const BandpassSpec& band() const { return spec_; }

private:
    struct Biquad {
        double b0, b1, b2, a1, a2;
    };

    std::vector<double> impulse_response(std::size_t n) const;

    double fs_;
    BandpassSpec spec_;
    std::array<Biquad, 2> stages_{};
};

// Strict form of the band-pass stage: errors out instead of clamping.
ChannelTrace bandpass_filter(const ChannelTrace& in, BandpassSpec spec = {});

}  // namespace ahs
