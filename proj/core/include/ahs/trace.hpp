#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ahs {

// Fixed predictor input width: ~2 ms at the 30 kHz base rate.
inline constexpr std::size_t kTemplateLength = 61;

// Single channel in double precision. Samples are microvolts through the
// conditioning pipeline and sigmas after whitening.
struct ChannelTrace {
    int channel_id = 0;
    double sample_rate_hz = 0.0;
    std::vector<double> samples;

    double duration_s() const {
        return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

// Multi-channel digitized signal in raw ADC counts. Channels may carry
// different rates once adaptive acquisition has run.
struct NeuralTrace {
    std::vector<int> channel_ids;
    std::vector<double> rates_hz;                 // per channel
    std::vector<std::vector<std::int16_t>> counts;  // per channel
    double uv_per_count = 0.195;

    std::size_t n_channels() const { return channel_ids.size(); }
    // index of a channel id, or -1
    int index_of(int channel_id) const;
    ChannelTrace channel_uv(std::size_t idx) const;
    void validate() const;  // throws std::invalid_argument on broken invariants
};

std::int16_t quantize_count(double value_uv, double uv_per_count);

struct SpikeTemplate {
    int electrode_id = 0;
    double base_rate_hz = 30000.0;
    std::vector<double> waveform_uv;  // length kTemplateLength after ingestion

    // most negative-going extremum; spikes are negative by convention
    std::size_t peak_index() const;
    double peak_uv() const;          // signed value at peak_index
    double peak_magnitude_uv() const;
    void validate() const;
};

// Center-crop or zero-pad an arbitrary-length waveform to kTemplateLength.
SpikeTemplate ingest_template(SpikeTemplate t);

struct SpikeEvent {
    int electrode_id = 0;
    double time_s = 0.0;
    double peak_uv = 0.0;  // signed, µV
};

// Interleaved little-endian int16 binary plus a JSON sidecar
// {n_channels, sample_rate_hz, uv_per_count, channel_ids}. Interleaving
// requires a common rate, so this format carries full-rate traces only.
void write_trace(const NeuralTrace& trace, const std::string& bin_path,
                 const std::string& meta_path);
NeuralTrace read_trace(const std::string& bin_path, const std::string& meta_path);

void write_templates(const std::vector<SpikeTemplate>& bank, const std::string& path);
std::vector<SpikeTemplate> read_templates(const std::string& path);

}  // namespace ahs
