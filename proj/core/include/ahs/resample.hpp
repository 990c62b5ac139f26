#pragma once

#include <cstddef>

#include "ahs/trace.hpp"

namespace ahs {

// Kaiser-windowed sinc interpolation kernel. `q` is the cutoff as a fraction
// of the source Nyquist rate; u is the offset in source samples.
struct SincKernel {
    double cutoff_ratio = 1.0;  // q in (0, 1]
    int taps_per_side = 64;
    double beta = 8.6;

    double operator()(double u) const;
};

// Band-limited interpolation of `in` onto a uniform grid of n_out samples at
// target_rate_hz, starting at t = 0. When downsampling, the kernel cutoff is
// 0.45 * target rate so the new Nyquist band stays alias-free; otherwise the
// full source band passes through and grid-aligned positions reproduce the
// input samples exactly.
ChannelTrace resample_channel_n(const ChannelTrace& in, double target_rate_hz,
                                std::size_t n_out);

// As above with n_out = round(duration * target_rate_hz).
ChannelTrace resample_channel(const ChannelTrace& in, double target_rate_hz);

// Count-level wrapper: re-digitizes the selected channel at the new rate.
// Output is a single-channel trace with the same uv_per_count.
NeuralTrace resample_trace(const NeuralTrace& trace, int channel_id, double target_rate_hz);

}  // namespace ahs
