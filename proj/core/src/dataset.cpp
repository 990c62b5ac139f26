#include "ahs/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ahs/evaluation.hpp"
#include "ahs/parallel.hpp"
#include "ahs/resample.hpp"
#include "ahs/rng.hpp"
#include "ahs/synth.hpp"

namespace ahs {

TrainingSample generate_training_sample(const SpikeTemplate& tmpl, int factor, double threshold_uv,
                                        double noise_sigma_uv, double firing_rate_hz,
                                        std::uint64_t seed, const GenSettings& gs) {
    tmpl.validate();
    if (!gs.factor_set.contains(factor)) {
        throw std::invalid_argument("generate_training_sample: factor not in the supported set");
    }
    if (!(firing_rate_hz > 0.0)) {
        throw std::invalid_argument("generate_training_sample: firing rate must be > 0");
    }
    if (!(noise_sigma_uv > 0.0)) {
        throw std::invalid_argument("generate_training_sample: noise sigma must be > 0");
    }

    const auto n_samples =
        static_cast<std::size_t>(std::llround(gs.duration_s * gs.base_rate_hz));
    const double margin_s = static_cast<double>(kTemplateLength) / gs.base_rate_hz;

    Rng rng(seed);
    ChannelTrace raw;
    raw.channel_id = tmpl.electrode_id;
    raw.sample_rate_hz = gs.base_rate_hz;
    raw.samples.resize(n_samples);
    for (auto& v : raw.samples) v = rng.gaussian(0.0, noise_sigma_uv);

    const std::vector<double> spike_times =
        draw_spike_times(gs.duration_s, firing_rate_hz, gs.min_separation_s, margin_s, rng);
    const auto peak_idx = static_cast<std::ptrdiff_t>(tmpl.peak_index());
    for (double t_spike : spike_times) {
        const auto peak_sample =
            static_cast<std::ptrdiff_t>(std::llround(t_spike * gs.base_rate_hz));
        const std::ptrdiff_t start = peak_sample - peak_idx;
        for (std::size_t k = 0; k < tmpl.waveform_uv.size(); ++k) {
            const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(k);
            if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n_samples)) continue;
            raw.samples[static_cast<std::size_t>(idx)] += tmpl.waveform_uv[k];
        }
    }

    // full-rate noise floor: the calibration-time quantity the optimizer
    // normalizes thresholds against
    const BandpassFilter full_filter(gs.base_rate_hz, gs.pipeline.band);
    double sigma_full;
    {
        ChannelTrace filtered = full_filter.process(raw);
        sigma_full = estimate_noise_sigma_masked(filtered);
    }

    ChannelTrace at_rate;
    if (factor == 1) {
        at_rate = raw;
    } else {
        const double realized = gs.base_rate_hz / factor;
        const auto n_out = (n_samples + static_cast<std::size_t>(factor) - 1) /
                           static_cast<std::size_t>(factor);
        at_rate = resample_channel_n(raw, realized, n_out);
    }
    const ConditionResult cond = condition_and_detect(at_rate, threshold_uv, gs.pipeline);

    ElectrodeGroundTruth truth;
    truth.electrode_id = tmpl.electrode_id;
    truth.event_times_s = spike_times;
    const DetectionReport report = match_events(truth, cond.events, gs.match_window_s);

    TrainingSample sample;
    sample.input = PredictorInput::make(tmpl, 1.0 / factor, threshold_uv / sigma_full, sigma_full);
    sample.target = ErrorEstimate{report.fnr, report.fpr};
    return sample;
}

CandidateGrid CandidateGrid::defaults() {
    CandidateGrid grid;
    grid.factors = FactorSet::defaults().factors;
    grid.thresholds_sigma = {-5.0, -5.5};
    grid.corridor_fractions = {0.35, 0.6};
    return grid;
}

Dataset build_dataset(const std::vector<SpikeTemplate>& templates, const CandidateGrid& grid,
                      std::size_t n_samples, std::uint64_t seed, const BuildSettings& bs) {
    if (templates.empty()) throw std::invalid_argument("build_dataset: no templates");
    if (grid.factors.empty() || grid.n_thresholds() == 0) {
        throw std::invalid_argument("build_dataset: empty candidate grid");
    }
    if (n_samples < 10) throw std::invalid_argument("build_dataset: need at least 10 samples");
    for (double s : grid.thresholds_sigma) {
        if (!(s < 0.0)) throw std::invalid_argument("build_dataset: thresholds must be negative");
    }
    for (double f : grid.corridor_fractions) {
        if (!(f > 0.0) || !(f < 1.0)) {
            throw std::invalid_argument("build_dataset: corridor fractions must lie in (0, 1)");
        }
    }
    for (int f : grid.factors) {
        if (!bs.gen.factor_set.contains(f)) {
            throw std::invalid_argument("build_dataset: grid factor outside the supported set");
        }
    }

    // nominal filtered-noise sigma for white input noise; converts the sigma
    // grid to µV thresholds without measuring each trace first
    const double noise_gain =
        BandpassFilter(bs.gen.base_rate_hz, bs.gen.pipeline.band).noise_gain();
    const double sigma_nominal = bs.noise_sigma_uv * noise_gain;

    std::vector<TemplateResponse> responses(templates.size());
    for (std::size_t t = 0; t < templates.size(); ++t) {
        responses[t] = filtered_template_response(templates[t], bs.gen.pipeline.band);
    }

    struct Pick {
        std::size_t tmpl;
        int factor;
        double threshold_uv;
        std::uint64_t seed;
    };
    Rng rng(seed);
    std::vector<Pick> picks(n_samples);
    for (auto& p : picks) {
        p.tmpl = static_cast<std::size_t>(rng.below(templates.size()));
        p.factor = grid.factors[rng.below(grid.factors.size())];
        const std::size_t t_idx = rng.below(grid.n_thresholds());
        if (t_idx < grid.thresholds_sigma.size()) {
            p.threshold_uv = grid.thresholds_sigma[t_idx] * sigma_nominal;
        } else {
            const double frac = grid.corridor_fractions[t_idx - grid.thresholds_sigma.size()];
            p.threshold_uv = std::min(corridor_threshold_uv(responses[p.tmpl], frac),
                                      grid.corridor_floor_sigmas * sigma_nominal);
        }
        p.seed = rng.bits();
    }

    std::vector<TrainingSample> samples(n_samples);
    parallel_for(n_samples, [&](std::size_t i) {
        const Pick& p = picks[i];
        samples[i] = generate_training_sample(templates[p.tmpl], p.factor, p.threshold_uv,
                                              bs.noise_sigma_uv, bs.firing_rate_hz, p.seed, bs.gen);
    });

    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    const std::size_t n_train = (n_samples * 8) / 10;
    Dataset ds;
    ds.train.reserve(n_train);
    ds.test.reserve(n_samples - n_train);
    for (std::size_t i = 0; i < n_samples; ++i) {
        (i < n_train ? ds.train : ds.test).push_back(std::move(samples[order[i]]));
    }
    return ds;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    out << "split,rate_norm,threshold_norm,peak_snr_log,fnr,fpr\n";
    const auto dump = [&out](const std::vector<TrainingSample>& set, const char* name) {
        for (const auto& s : set) {
            out << name << "," << s.input.rate_norm << "," << s.input.threshold_norm << ","
                << s.input.peak_snr_log << "," << s.target.fnr << "," << s.target.fpr << "\n";
        }
    };
    dump(ds.train, "train");
    dump(ds.test, "test");
}

}  // namespace ahs
