#include "ahs/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ahs {

using nlohmann::json;

int NeuralTrace::index_of(int channel_id) const {
    for (std::size_t i = 0; i < channel_ids.size(); ++i) {
        if (channel_ids[i] == channel_id) return static_cast<int>(i);
    }
    return -1;
}

ChannelTrace NeuralTrace::channel_uv(std::size_t idx) const {
    if (idx >= counts.size()) throw std::invalid_argument("channel index out of range");
    ChannelTrace out;
    out.channel_id = channel_ids[idx];
    out.sample_rate_hz = rates_hz[idx];
    out.samples.resize(counts[idx].size());
    for (std::size_t i = 0; i < counts[idx].size(); ++i) {
        out.samples[i] = counts[idx][i] * uv_per_count;
    }
    return out;
}

void NeuralTrace::validate() const {
    if (channel_ids.size() != rates_hz.size() || channel_ids.size() != counts.size()) {
        throw std::invalid_argument("NeuralTrace: per-channel arrays disagree in length");
    }
    if (!(uv_per_count > 0.0)) throw std::invalid_argument("NeuralTrace: uv_per_count must be > 0");
    std::set<int> seen;
    for (std::size_t i = 0; i < channel_ids.size(); ++i) {
        if (!(rates_hz[i] > 0.0)) throw std::invalid_argument("NeuralTrace: sample rate must be > 0");
        if (channel_ids[i] < 0) throw std::invalid_argument("NeuralTrace: channel ids must be >= 0");
        if (!seen.insert(channel_ids[i]).second) {
            throw std::invalid_argument("NeuralTrace: duplicate channel id");
        }
    }
}

std::int16_t quantize_count(double value_uv, double uv_per_count) {
    const double c = std::round(value_uv / uv_per_count);
    const double lo = std::numeric_limits<std::int16_t>::min();
    const double hi = std::numeric_limits<std::int16_t>::max();
    return static_cast<std::int16_t>(std::clamp(c, lo, hi));
}

std::size_t SpikeTemplate::peak_index() const {
    std::size_t best = 0;
    double mag = -1.0;
    for (std::size_t i = 0; i < waveform_uv.size(); ++i) {
        if (std::abs(waveform_uv[i]) > mag) {
            mag = std::abs(waveform_uv[i]);
            best = i;
        }
    }
    return best;
}

double SpikeTemplate::peak_uv() const {
    return waveform_uv.empty() ? 0.0 : waveform_uv[peak_index()];
}

double SpikeTemplate::peak_magnitude_uv() const { return std::abs(peak_uv()); }

void SpikeTemplate::validate() const {
    if (waveform_uv.size() != kTemplateLength) {
        throw std::invalid_argument("SpikeTemplate: waveform length != template length");
    }
    if (!(base_rate_hz > 0.0)) throw std::invalid_argument("SpikeTemplate: base rate must be > 0");
    if (peak_magnitude_uv() <= 0.0) {
        throw std::invalid_argument("SpikeTemplate: degenerate all-zero waveform");
    }
}

SpikeTemplate ingest_template(SpikeTemplate t) {
    const std::size_t n = t.waveform_uv.size();
    if (n == kTemplateLength) return t;
    std::vector<double> w(kTemplateLength, 0.0);
    if (n > kTemplateLength) {
        const std::size_t start = (n - kTemplateLength) / 2;
        std::copy_n(t.waveform_uv.begin() + static_cast<std::ptrdiff_t>(start), kTemplateLength,
                    w.begin());
    } else {
        const std::size_t start = (kTemplateLength - n) / 2;
        std::copy(t.waveform_uv.begin(), t.waveform_uv.end(),
                  w.begin() + static_cast<std::ptrdiff_t>(start));
    }
    t.waveform_uv = std::move(w);
    return t;
}

void write_trace(const NeuralTrace& trace, const std::string& bin_path,
                 const std::string& meta_path) {
    trace.validate();
    if (trace.n_channels() == 0) throw std::invalid_argument("write_trace: no channels");
    const double rate = trace.rates_hz[0];
    const std::size_t len = trace.counts[0].size();
    for (std::size_t c = 0; c < trace.n_channels(); ++c) {
        if (trace.rates_hz[c] != rate || trace.counts[c].size() != len) {
            throw std::invalid_argument("write_trace: interleaved format needs uniform rate/length");
        }
    }

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("write_trace: cannot open " + bin_path);
    std::vector<std::int16_t> frame(trace.n_channels());
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t c = 0; c < trace.n_channels(); ++c) frame[c] = trace.counts[c][i];
        bin.write(reinterpret_cast<const char*>(frame.data()),
                  static_cast<std::streamsize>(frame.size() * sizeof(std::int16_t)));
    }
    if (!bin) throw std::runtime_error("write_trace: short write to " + bin_path);

    json meta{{"n_channels", trace.n_channels()},
              {"sample_rate_hz", rate},
              {"uv_per_count", trace.uv_per_count},
              {"channel_ids", trace.channel_ids}};
    std::ofstream out(meta_path);
    if (!out) throw std::runtime_error("write_trace: cannot open " + meta_path);
    out << meta.dump(2) << "\n";
}

NeuralTrace read_trace(const std::string& bin_path, const std::string& meta_path) {
    std::ifstream metaf(meta_path);
    if (!metaf) throw std::runtime_error("read_trace: cannot open " + meta_path);
    json meta = json::parse(metaf);

    NeuralTrace trace;
    const std::size_t n_channels = meta.at("n_channels").get<std::size_t>();
    const double rate = meta.at("sample_rate_hz").get<double>();
    trace.uv_per_count = meta.at("uv_per_count").get<double>();
    if (meta.contains("channel_ids")) {
        trace.channel_ids = meta.at("channel_ids").get<std::vector<int>>();
        if (trace.channel_ids.size() != n_channels) {
            throw std::runtime_error("read_trace: channel_ids length mismatch");
        }
    } else {
        for (std::size_t c = 0; c < n_channels; ++c) trace.channel_ids.push_back(static_cast<int>(c));
    }
    trace.rates_hz.assign(n_channels, rate);

    std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
    if (!bin) throw std::runtime_error("read_trace: cannot open " + bin_path);
    const std::streamsize bytes = bin.tellg();
    bin.seekg(0);
    const std::size_t frame_bytes = n_channels * sizeof(std::int16_t);
    if (bytes < 0 || static_cast<std::size_t>(bytes) % frame_bytes != 0) {
        throw std::runtime_error("read_trace: binary size is not a whole number of frames");
    }
    const std::size_t n_frames = static_cast<std::size_t>(bytes) / frame_bytes;
    trace.counts.assign(n_channels, std::vector<std::int16_t>(n_frames));
    std::vector<std::int16_t> frame(n_channels);
    for (std::size_t i = 0; i < n_frames; ++i) {
        bin.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(frame_bytes));
        for (std::size_t c = 0; c < n_channels; ++c) trace.counts[c][i] = frame[c];
    }
    if (!bin) throw std::runtime_error("read_trace: short read from " + bin_path);
    trace.validate();
    return trace;
}

void write_templates(const std::vector<SpikeTemplate>& bank, const std::string& path) {
    json arr = json::array();
    for (const auto& t : bank) {
        arr.push_back({{"electrode_id", t.electrode_id},
                       {"base_rate_hz", t.base_rate_hz},
                       {"waveform_uv", t.waveform_uv}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_templates: cannot open " + path);
    out << arr.dump() << "\n";
}

std::vector<SpikeTemplate> read_templates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_templates: cannot open " + path);
    json arr = json::parse(in);
    std::vector<SpikeTemplate> bank;
    for (const auto& j : arr) {
        SpikeTemplate t;
        t.electrode_id = j.at("electrode_id").get<int>();
        t.base_rate_hz = j.at("base_rate_hz").get<double>();
        t.waveform_uv = j.at("waveform_uv").get<std::vector<double>>();
        t = ingest_template(std::move(t));
        t.validate();
        bank.push_back(std::move(t));
    }
    return bank;
}

}  // namespace ahs
