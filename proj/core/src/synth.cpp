#include "ahs/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ahs/parallel.hpp"

namespace ahs {

using nlohmann::json;

SpikeTemplate make_biphasic_template(int electrode_id, const TemplateParams& params,
                                     double base_rate_hz) {
    SpikeTemplate t;
    t.electrode_id = electrode_id;
    t.base_rate_hz = base_rate_hz;
    t.waveform_uv.resize(kTemplateLength);

    const double dt_ms = 1000.0 / base_rate_hz;
    const auto center = static_cast<double>(kTemplateLength / 2);
    const double sig_t = params.trough_width_ms / 2.355;  // FWHM -> sigma
    const double sig_r = params.rebound_width_ms / 2.355;
    for (std::size_t i = 0; i < kTemplateLength; ++i) {
        const double t_ms = (static_cast<double>(i) - center) * dt_ms;
        const double trough = -params.peak_uv * std::exp(-0.5 * (t_ms / sig_t) * (t_ms / sig_t));
        const double dr = (t_ms - params.rebound_delay_ms) / sig_r;
        const double rebound = params.rebound_ratio * params.peak_uv * std::exp(-0.5 * dr * dr);
        t.waveform_uv[i] = trough + rebound;
    }
    return t;
}

std::vector<SpikeTemplate> make_template_bank(std::size_t n, std::uint64_t seed, double amp_min_uv,
                                              double amp_max_uv, double base_rate_hz) {
    if (n == 0) throw std::invalid_argument("make_template_bank: n must be > 0");
    std::vector<SpikeTemplate> bank;
    bank.reserve(n);
    const double ratio = amp_max_uv / amp_min_uv;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, i));
        TemplateParams p;
        const double frac = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5;
        p.peak_uv = amp_min_uv * std::pow(ratio, frac);
        p.trough_width_ms = rng.uniform(0.3, 1.0);
        p.rebound_ratio = rng.uniform(0.25, 0.45);
        p.rebound_width_ms = rng.uniform(0.5, 1.0);
        p.rebound_delay_ms = rng.uniform(0.4, 0.8);
        bank.push_back(make_biphasic_template(static_cast<int>(i), p, base_rate_hz));
    }
    return bank;
}

std::vector<double> draw_spike_times(double duration_s, double rate_hz, double min_separation_s,
                                     double margin_s, Rng& rng) {
    std::vector<double> times;
    if (duration_s <= 2.0 * margin_s) return times;
    double t = margin_s;
    for (;;) {
        t += std::max(rng.exponential(rate_hz), min_separation_s);
        if (t >= duration_s - margin_s) break;
        times.push_back(t);
    }
    return times;
}

SessionDataset synthesize_dataset(const SynthConfig& config, std::uint64_t seed) {
    if (config.n_electrodes == 0) throw std::invalid_argument("synthesize_dataset: no electrodes");

    SessionDataset ds;
    ds.config = config;
    ds.seed = seed;
    ds.templates = make_template_bank(config.n_electrodes, mix_seed(seed, 7001),
                                      config.amp_min_uv, config.amp_max_uv, config.base_rate_hz);

    const auto n_samples =
        static_cast<std::size_t>(std::llround(config.duration_s * config.base_rate_hz));
    const double margin_s = static_cast<double>(kTemplateLength) / config.base_rate_hz;

    // one neuron per electrode; the strongest n_shared_neurons are also
    // visible on the following electrode at reduced amplitude (weak neurons
    // would put sub-threshold events into the neighbour's ground truth)
    ds.trains.resize(config.n_electrodes);
    for (std::size_t e = 0; e < config.n_electrodes; ++e) {
        Rng rng(mix_seed(seed, 1000 + e));
        NeuronSpikeTrain train;
        train.neuron_id = static_cast<int>(e);
        train.footprint = {static_cast<int>(e)};
        if (e + config.n_shared_neurons >= config.n_electrodes && config.n_electrodes > 1) {
            train.footprint.push_back(static_cast<int>((e + 1) % config.n_electrodes));
        }
        train.spike_times_s = draw_spike_times(config.duration_s, config.firing_rate_hz,
                                               config.min_separation_s, margin_s, rng);
        ds.trains[e] = std::move(train);
    }

    ds.trace.uv_per_count = config.uv_per_count;
    ds.trace.channel_ids.resize(config.n_electrodes);
    ds.trace.rates_hz.assign(config.n_electrodes, config.base_rate_hz);
    ds.trace.counts.resize(config.n_electrodes);

    parallel_for(config.n_electrodes, [&](std::size_t e) {
        Rng rng(mix_seed(seed, 2000 + e));
        std::vector<double> uv(n_samples);
        for (auto& v : uv) v = rng.gaussian(0.0, config.noise_sigma_uv);

        for (const auto& train : ds.trains) {
            double weight = 0.0;
            for (std::size_t f = 0; f < train.footprint.size(); ++f) {
                if (train.footprint[f] == static_cast<int>(e)) {
                    weight = f == 0 ? 1.0 : config.shared_weight;
                    break;
                }
            }
            if (weight == 0.0) continue;
            const auto& tmpl = ds.templates[static_cast<std::size_t>(train.neuron_id)];
            const auto peak_idx = static_cast<std::ptrdiff_t>(tmpl.peak_index());
            for (double t_spike : train.spike_times_s) {
                const auto peak_sample =
                    static_cast<std::ptrdiff_t>(std::llround(t_spike * config.base_rate_hz));
                const std::ptrdiff_t start = peak_sample - peak_idx;
                for (std::size_t k = 0; k < tmpl.waveform_uv.size(); ++k) {
                    const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(k);
                    if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n_samples)) continue;
                    uv[static_cast<std::size_t>(idx)] += weight * tmpl.waveform_uv[k];
                }
            }
        }

        auto& counts = ds.trace.counts[e];
        counts.resize(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
            counts[i] = quantize_count(uv[i], config.uv_per_count);
        }
        ds.trace.channel_ids[e] = static_cast<int>(e);
    });

    return ds;
}

namespace {

json config_to_json(const SynthConfig& c) {
    return json{{"n_electrodes", c.n_electrodes},
                {"duration_s", c.duration_s},
                {"base_rate_hz", c.base_rate_hz},
                {"noise_sigma_uv", c.noise_sigma_uv},
                {"firing_rate_hz", c.firing_rate_hz},
                {"uv_per_count", c.uv_per_count},
                {"amp_min_uv", c.amp_min_uv},
                {"amp_max_uv", c.amp_max_uv},
                {"n_shared_neurons", c.n_shared_neurons},
                {"shared_weight", c.shared_weight},
                {"min_separation_s", c.min_separation_s}};
}

SynthConfig config_from_json(const json& j) {
    SynthConfig c;
    c.n_electrodes = j.at("n_electrodes").get<std::size_t>();
    c.duration_s = j.at("duration_s").get<double>();
    c.base_rate_hz = j.at("base_rate_hz").get<double>();
    c.noise_sigma_uv = j.at("noise_sigma_uv").get<double>();
    c.firing_rate_hz = j.at("firing_rate_hz").get<double>();
    c.uv_per_count = j.at("uv_per_count").get<double>();
    c.amp_min_uv = j.at("amp_min_uv").get<double>();
    c.amp_max_uv = j.at("amp_max_uv").get<double>();
    c.n_shared_neurons = j.at("n_shared_neurons").get<std::size_t>();
    c.shared_weight = j.at("shared_weight").get<double>();
    c.min_separation_s = j.at("min_separation_s").get<double>();
    return c;
}

}  // namespace

void write_dataset(const SessionDataset& ds, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_trace(ds.trace, (dir / "trace.bin").string(), (dir / "trace.json").string());
    write_templates(ds.templates, (dir / "templates.json").string());

    json truth = json::array();
    for (const auto& train : ds.trains) {
        truth.push_back({{"neuron_id", train.neuron_id},
                         {"footprint", train.footprint},
                         {"spike_times_s", train.spike_times_s}});
    }
    {
        std::ofstream out(dir / "ground_truth.json");
        if (!out) throw std::runtime_error("write_dataset: cannot open ground_truth.json");
        out << json{{"neurons", truth}}.dump() << "\n";
    }
    {
        std::ofstream out(dir / "synth_meta.json");
        if (!out) throw std::runtime_error("write_dataset: cannot open synth_meta.json");
        out << json{{"seed", ds.seed}, {"config", config_to_json(ds.config)}}.dump(2) << "\n";
    }
}

SessionDataset read_dataset(const std::string& dir_in) {
    namespace fs = std::filesystem;
    const fs::path dir(dir_in);
    SessionDataset ds;
    {
        std::ifstream in(dir / "synth_meta.json");
        if (!in) throw std::runtime_error("read_dataset: cannot open synth_meta.json");
        json meta = json::parse(in);
        ds.seed = meta.at("seed").get<std::uint64_t>();
        ds.config = config_from_json(meta.at("config"));
    }
    ds.trace = read_trace((dir / "trace.bin").string(), (dir / "trace.json").string());
    ds.templates = read_templates((dir / "templates.json").string());
    {
        std::ifstream in(dir / "ground_truth.json");
        if (!in) throw std::runtime_error("read_dataset: cannot open ground_truth.json");
        json truth = json::parse(in);
        for (const auto& j : truth.at("neurons")) {
            NeuronSpikeTrain train;
            train.neuron_id = j.at("neuron_id").get<int>();
            train.footprint = j.at("footprint").get<std::vector<int>>();
            train.spike_times_s = j.at("spike_times_s").get<std::vector<double>>();
            ds.trains.push_back(std::move(train));
        }
    }
    return ds;
}

}  // namespace ahs
