#include "ahs/filters.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace ahs {

namespace {

using cplx = std::complex<double>;

double biquad_magnitude(double b0, double b1, double b2, double a1, double a2, double w) {
    const cplx z1 = std::polar(1.0, -w);
    const cplx z2 = z1 * z1;
    const cplx num = b0 + b1 * z1 + b2 * z2;
    const cplx den = 1.0 + a1 * z1 + a2 * z2;
    return std::abs(num / den);
}

}  // namespace

BandpassSpec clamp_band(BandpassSpec spec, double sample_rate_hz, bool* clamped) {
    if (clamped != nullptr) *clamped = false;
    const double limit = 0.45 * sample_rate_hz;
    if (spec.high_hz > limit) {
        spec.high_hz = limit;
        if (clamped != nullptr) *clamped = true;
    }
    if (!(spec.low_hz > 0.0) || spec.high_hz <= spec.low_hz) {
        throw std::invalid_argument("clamp_band: sample rate too low for the pass band");
    }
    return spec;
}

BandpassFilter::BandpassFilter(double sample_rate_hz, BandpassSpec spec)
    : fs_(sample_rate_hz), spec_(spec) {
    if (!(fs_ > 0.0)) throw std::invalid_argument("BandpassFilter: sample rate must be > 0");
    if (!(spec.low_hz > 0.0) || spec.high_hz <= spec.low_hz) {
        throw std::invalid_argument("BandpassFilter: need 0 < low < high");
    }
    if (spec.high_hz >= 0.5 * fs_) {
        throw std::invalid_argument("BandpassFilter: upper cutoff at or above Nyquist");
    }

    // prewarped analog band edges
    const double k = 2.0 * fs_;
    const double w1 = k * std::tan(M_PI * spec.low_hz / fs_);
    const double w2 = k * std::tan(M_PI * spec.high_hz / fs_);
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;

    // order-2 Butterworth prototype pole (upper half plane); the band-pass
    // transform s -> (s^2 + w0^2)/(bw*s) splits it into two pole pairs
    const cplx proto(-M_SQRT1_2, M_SQRT1_2);
    const cplx bp = bw * proto;
    const cplx disc = std::sqrt(bp * bp - 4.0 * w0 * w0);
    const cplx poles[2] = {0.5 * (bp + disc), 0.5 * (bp - disc)};

    const double wc_digital = 2.0 * std::atan(w0 / k);
    for (int i = 0; i < 2; ++i) {
        const cplx zp = (1.0 + poles[i] / k) / (1.0 - poles[i] / k);
        Biquad& s = stages_[static_cast<std::size_t>(i)];
        s.a1 = -2.0 * zp.real();
        s.a2 = std::norm(zp);
        // analog zeros at 0 and infinity -> digital zeros at +1 and -1
        const double g = biquad_magnitude(1.0, 0.0, -1.0, s.a1, s.a2, wc_digital);
        s.b0 = 1.0 / g;
        s.b1 = 0.0;
        s.b2 = -1.0 / g;
    }
}

std::vector<double> BandpassFilter::process(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    double v1[2] = {0.0, 0.0};  // DF2T state per stage
    double v2[2] = {0.0, 0.0};
    for (std::size_t n = 0; n < x.size(); ++n) {
        double s = x[n];
        for (int i = 0; i < 2; ++i) {
            const Biquad& q = stages_[static_cast<std::size_t>(i)];
            const double out = q.b0 * s + v1[i];
            v1[i] = q.b1 * s - q.a1 * out + v2[i];
            v2[i] = q.b2 * s - q.a2 * out;
            s = out;
        }
        y[n] = s;
    }
    return y;
}

ChannelTrace BandpassFilter::process(const ChannelTrace& in) const {
    ChannelTrace out = in;
    out.samples = process(in.samples);
    return out;
}

double BandpassFilter::magnitude_at(double f_hz) const {
    const double w = 2.0 * M_PI * f_hz / fs_;
    double m = 1.0;
    for (const auto& q : stages_) m *= biquad_magnitude(q.b0, q.b1, q.b2, q.a1, q.a2, w);
    return m;
}

std::vector<double> BandpassFilter::impulse_response(std::size_t n) const {
    std::vector<double> x(n, 0.0);
    x[0] = 1.0;
    return process(x);
}

double BandpassFilter::peak_delay_s() const {
    const auto n = static_cast<std::size_t>(std::max(1024.0, std::round(0.2 * fs_)));
    const auto h = impulse_response(n);
    std::size_t best = 0;
    double mag = -1.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs(h[i]) > mag) {
            mag = std::abs(h[i]);
            best = i;
        }
    }
    return static_cast<double>(best) / fs_;
}

double BandpassFilter::noise_gain() const {
    const auto n = static_cast<std::size_t>(std::max(1024.0, std::round(0.2 * fs_)));
    const auto h = impulse_response(n);
    double e = 0.0;
    for (double v : h) e += v * v;
    return std::sqrt(e);
}

ChannelTrace bandpass_filter(const ChannelTrace& in, BandpassSpec spec) {
    if (!(in.sample_rate_hz > 2.0 * spec.high_hz)) {
        throw std::invalid_argument(
            "bandpass_filter: sample rate must exceed twice the upper cutoff; clamp the band first");
    }
    return BandpassFilter(in.sample_rate_hz, spec).process(in);
}

}  // namespace ahs
