#include "ahs/resample.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ahs {

namespace {

double bessel_i0(double x) {
    // power series; converges quickly for the |x| <= beta range used here
    const double h = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= h / (static_cast<double>(k) * k);
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

}  // namespace

double SincKernel::operator()(double u) const {
    const double a = std::abs(u);
    if (a > taps_per_side) return 0.0;
    const double frac = a / taps_per_side;
    const double window = bessel_i0(beta * std::sqrt(1.0 - frac * frac)) / bessel_i0(beta);
    return cutoff_ratio * sinc(cutoff_ratio * u) * window;
}

ChannelTrace resample_channel_n(const ChannelTrace& in, double target_rate_hz,
                                std::size_t n_out) {
    if (!(target_rate_hz > 0.0)) throw std::invalid_argument("resample: target rate must be > 0");
    if (!(in.sample_rate_hz > 0.0)) throw std::invalid_argument("resample: source rate must be > 0");

    const double src = in.sample_rate_hz;
    const bool down = target_rate_hz < src;
    SincKernel kernel;
    kernel.cutoff_ratio = down ? 0.9 * target_rate_hz / src : 1.0;

    ChannelTrace out;
    out.channel_id = in.channel_id;
    out.sample_rate_hz = target_rate_hz;
    out.samples.resize(n_out);

    const double step = src / target_rate_hz;
    const auto& x = in.samples;
    const auto n_in = static_cast<std::ptrdiff_t>(x.size());
    const int taps = kernel.taps_per_side;

    // tap weights depend only on the fractional grid offset, which cycles for
    // rational rate ratios; cache one weight vector per distinct offset
    std::vector<std::pair<double, std::vector<double>>> cache;

    for (std::size_t n = 0; n < n_out; ++n) {
        const double pos = static_cast<double>(n) * step;
        const double ipos = std::floor(pos);
        const double f = pos - ipos;

        if (!down && f == 0.0) {
            // exact grid point with full-band kernel: identity
            const auto i = static_cast<std::ptrdiff_t>(ipos);
            out.samples[n] = (i >= 0 && i < n_in) ? x[static_cast<std::size_t>(i)] : 0.0;
            continue;
        }

        const std::vector<double>* weights = nullptr;
        for (const auto& c : cache) {
            if (c.first == f) {
                weights = &c.second;
                break;
            }
        }
        const auto k0_rel = static_cast<std::ptrdiff_t>(std::ceil(f - taps));
        const auto k1_rel = static_cast<std::ptrdiff_t>(std::floor(f + taps));
        if (weights == nullptr) {
            std::vector<double> w;
            w.reserve(static_cast<std::size_t>(k1_rel - k0_rel + 1));
            double sum = 0.0;
            for (std::ptrdiff_t k = k0_rel; k <= k1_rel; ++k) {
                const double v = kernel(f - static_cast<double>(k));
                w.push_back(v);
                sum += v;
            }
            // unit DC gain; windowing leaves the raw sum ~1e-4 off
            if (std::abs(sum) > 0.5) {
                for (auto& v : w) v /= sum;
            }
            cache.emplace_back(f, std::move(w));
            weights = &cache.back().second;
        }

        const auto base = static_cast<std::ptrdiff_t>(ipos);
        double acc = 0.0;
        for (std::size_t j = 0; j < weights->size(); ++j) {
            const std::ptrdiff_t k = base + k0_rel + static_cast<std::ptrdiff_t>(j);
            if (k < 0 || k >= n_in) continue;
            acc += (*weights)[j] * x[static_cast<std::size_t>(k)];
        }
        out.samples[n] = acc;
    }
    return out;
}

ChannelTrace resample_channel(const ChannelTrace& in, double target_rate_hz) {
    if (!(target_rate_hz > 0.0)) throw std::invalid_argument("resample: target rate must be > 0");
    const double duration = in.duration_s();
    const auto n_out = static_cast<std::size_t>(std::llround(duration * target_rate_hz));
    return resample_channel_n(in, target_rate_hz, n_out);
}

NeuralTrace resample_trace(const NeuralTrace& trace, int channel_id, double target_rate_hz) {
    if (!(target_rate_hz > 0.0)) throw std::invalid_argument("resample_trace: target rate must be > 0");
    const int idx = trace.index_of(channel_id);
    if (idx < 0) throw std::invalid_argument("resample_trace: unknown channel id");

    const ChannelTrace uv = trace.channel_uv(static_cast<std::size_t>(idx));
    const ChannelTrace res = resample_channel(uv, target_rate_hz);

    NeuralTrace out;
    out.uv_per_count = trace.uv_per_count;
    out.channel_ids = {channel_id};
    out.rates_hz = {target_rate_hz};
    out.counts.emplace_back();
    out.counts[0].reserve(res.samples.size());
    for (double v : res.samples) out.counts[0].push_back(quantize_count(v, trace.uv_per_count));
    return out;
}

}  // namespace ahs
