#include "ahs/comparison.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ahs/filters.hpp"
#include "ahs/packets.hpp"
#include "ahs/parallel.hpp"

namespace ahs {

std::vector<double> measure_noise_sigmas(const SessionDataset& dataset,
                                         const PipelineSettings& pipeline) {
    std::vector<double> sigmas(dataset.trace.n_channels());
    parallel_for(dataset.trace.n_channels(), [&](std::size_t c) {
        const BandpassFilter filter(dataset.trace.rates_hz[c], pipeline.band);
        sigmas[c] = estimate_noise_sigma_masked(filter.process(dataset.trace.channel_uv(c)));
    });
    return sigmas;
}

AllocationEval evaluate_allocation(const SessionDataset& dataset,
                                   const std::vector<ElectrodeSchedule>& schedules,
                                   const ClockPlan& plan, const PipelineSettings& pipeline,
                                   double match_window_s) {
    const AcquireResult acquired = acquire(dataset.trace, schedules, plan);

    AllocationEval eval;
    eval.cost = acquired.cost;
    eval.cr_acquisition = acquisition_compression_ratio(acquired.cost);
    eval.reports.resize(schedules.size());

    parallel_for(schedules.size(), [&](std::size_t c) {
        const ChannelTrace uv = acquired.trace.channel_uv(c);
        const auto cond = condition_and_detect(uv, schedules[c].threshold_uv, pipeline);
        const auto truth = dataset.ground_truth(schedules[c].electrode_id, match_window_s);
        eval.reports[c] = match_events(truth, cond.events, match_window_s);
    });

    for (const auto& r : eval.reports) {
        eval.mean_fnr += r.fnr;
        eval.mean_fpr += r.fpr;
        eval.mean_sde += r.sde;
        eval.n_detected += r.n_detected;
    }
    const auto n = static_cast<double>(eval.reports.empty() ? 1 : eval.reports.size());
    eval.mean_fnr /= n;
    eval.mean_fpr /= n;
    eval.mean_sde /= n;
    return eval;
}

std::vector<ElectrodeSchedule> uniform_allocation(const SessionDataset& dataset, int factor,
                                                  double threshold_sigma, const ClockPlan& plan,
                                                  const PipelineSettings& pipeline) {
    if (factor < 1) throw std::invalid_argument("uniform_allocation: factor must be >= 1");
    if (!(threshold_sigma < 0.0)) {
        throw std::invalid_argument("uniform_allocation: threshold must be negative");
    }
    const auto sigmas = measure_noise_sigmas(dataset, pipeline);
    const double r_max = plan.r_max_hz();
    std::vector<ElectrodeSchedule> schedules(dataset.trace.n_channels());
    for (std::size_t c = 0; c < schedules.size(); ++c) {
        ElectrodeSchedule& s = schedules[c];
        s.electrode_id = dataset.trace.channel_ids[c];
        s.factor = factor;
        s.realized_rate_hz = r_max / factor;
        s.target_rate_hz = s.realized_rate_hz;
        s.threshold_uv = threshold_sigma * sigmas[c];
    }
    return schedules;
}

namespace {

struct BaselineOutcome {
    double mean_fnr = 0.0;
    double mean_fpr = 0.0;
    double mean_sde = 0.0;
    std::uint64_t blocks_per_channel = 0;
};

// digitize-then-compress: full-rate blocks through the codec, then the
// standard detection chain on the reconstruction
template <typename CompressFn>
BaselineOutcome evaluate_baseline(const SessionDataset& dataset, std::size_t block_len,
                                  const CompressFn& roundtrip, const std::vector<double>& sigmas,
                                  double threshold_sigma, const PipelineSettings& pipeline,
                                  double match_window_s) {
    const std::size_t n_channels = dataset.trace.n_channels();
    std::vector<DetectionReport> reports(n_channels);
    std::uint64_t blocks_per_channel = 0;

    parallel_for(n_channels, [&](std::size_t c) {
        const ChannelTrace uv = dataset.trace.channel_uv(c);
        const std::size_t n = uv.samples.size();
        const std::size_t n_blocks = (n + block_len - 1) / block_len;
        if (c == 0) blocks_per_channel = n_blocks;

        ChannelTrace rec = uv;
        rec.samples.assign(n_blocks * block_len, 0.0);
        std::copy(uv.samples.begin(), uv.samples.end(), rec.samples.begin());
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::span<double> block(&rec.samples[b * block_len], block_len);
            const auto restored = roundtrip(std::span<const double>(block));
            std::copy(restored.begin(), restored.end(), block.begin());
        }
        rec.samples.resize(n);

        const double threshold_uv = threshold_sigma * sigmas[c];
        const auto cond = condition_and_detect(rec, threshold_uv, pipeline);
        const auto truth = dataset.ground_truth(uv.channel_id, match_window_s);
        reports[c] = match_events(truth, cond.events, match_window_s);
    });

    BaselineOutcome out;
    out.blocks_per_channel = blocks_per_channel;
    for (const auto& r : reports) {
        out.mean_fnr += r.fnr;
        out.mean_fpr += r.fpr;
        out.mean_sde += r.sde;
    }
    const auto n = static_cast<double>(n_channels == 0 ? 1 : n_channels);
    out.mean_fnr /= n;
    out.mean_fpr /= n;
    out.mean_sde /= n;
    return out;
}

}  // namespace

std::vector<ComparisonRow> run_comparison(const SessionDataset& dataset, const MlpModel& model,
                                          const SchemeSet& schemes,
                                          const ComparisonSettings& settings) {
    if (!schemes.adaptive && !schemes.dct && !schemes.cs) {
        throw std::invalid_argument("run_comparison: empty scheme set");
    }
    std::vector<ComparisonRow> rows;
    const auto sigmas = measure_noise_sigmas(dataset, settings.pipeline);
    const std::size_t n_channels = dataset.trace.n_channels();
    std::uint64_t full_samples = 0;
    for (const auto& ch : dataset.trace.counts) full_samples += ch.size();
    const std::uint64_t full_bits = full_samples * 16;

    if (schemes.adaptive) {
        const ConfigVector config = optimize_array(dataset.templates, sigmas, model,
                                                   settings.optimizer, settings.plan);
        const auto eval = evaluate_allocation(dataset, config.schedules, settings.plan,
                                              settings.pipeline, settings.match_window_s);
        ComparisonRow row;
        row.scheme = "adaptive";
        std::ostringstream cfg;
        cfg << "eps=" << settings.optimizer.epsilon;
        row.config = cfg.str();
        row.cr_acq = eval.cr_acquisition;
        const std::uint64_t event_bits = eval.n_detected * kEventPacketSize * 8;
        row.cr_tx = event_bits > 0 ? transmission_compression_ratio(full_bits, event_bits) : 0.0;
        row.fnr = eval.mean_fnr;
        row.fpr = eval.mean_fpr;
        row.sde = eval.mean_sde;
        row.executed_adc_samples = eval.cost.total_executed();
        row.compress_mults = 0;
        rows.push_back(row);
    }

    if (schemes.dct) {
        for (const auto& cfg : settings.dct_sweep) {
            cfg.validate();
            const auto outcome = evaluate_baseline(
                dataset, cfg.block_len,
                [&cfg](std::span<const double> block) {
                    return dct_decompress(dct_compress(block, cfg), cfg);
                },
                sigmas, settings.baseline_threshold_sigma, settings.pipeline,
                settings.match_window_s);
            ComparisonRow row;
            row.scheme = "dct";
            std::ostringstream c;
            c << "N=" << cfg.block_len << ",k=" << cfg.keep_k;
            row.config = c.str();
            row.cr_acq = 1.0;  // digitizes everything
            const std::uint64_t blocks = outcome.blocks_per_channel * n_channels;
            row.cr_tx = transmission_compression_ratio(
                blocks * cfg.block_len * 16, blocks * dct_payload_bits(cfg));
            row.fnr = outcome.mean_fnr;
            row.fpr = outcome.mean_fpr;
            row.sde = outcome.mean_sde;
            row.executed_adc_samples = full_samples;
            row.compress_mults = blocks * cfg.block_len * cfg.block_len;
            rows.push_back(row);
        }
    }

    if (schemes.cs) {
        for (const auto& cfg : settings.cs_sweep) {
            cfg.validate();
            const CsCodec codec(cfg);
            const auto outcome = evaluate_baseline(
                dataset, cfg.block_len,
                [&codec](std::span<const double> block) {
                    return codec.decompress(codec.compress(block));
                },
                sigmas, settings.baseline_threshold_sigma, settings.pipeline,
                settings.match_window_s);
            ComparisonRow row;
            row.scheme = "cs";
            std::ostringstream c;
            c << "N=" << cfg.block_len << ",M=" << cfg.n_measurements << ",k=" << cfg.sparsity_k;
            row.config = c.str();
            row.cr_acq = 1.0;
            const std::uint64_t blocks = outcome.blocks_per_channel * n_channels;
            row.cr_tx = transmission_compression_ratio(blocks * cfg.block_len * 16,
                                                       blocks * cs_payload_bits(cfg));
            row.fnr = outcome.mean_fnr;
            row.fpr = outcome.mean_fpr;
            row.sde = outcome.mean_sde;
            row.executed_adc_samples = full_samples;
            row.compress_mults = blocks * cfg.block_len * cfg.n_measurements;
            rows.push_back(row);
        }
    }
    return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_comparison_csv: cannot open " + path);
    out << "scheme,config,cr_acq,cr_tx,fnr,fpr,sde,executed_adc_samples,compress_mults\n";
    for (const auto& r : rows) {
        out << r.scheme << "," << r.config << "," << r.cr_acq << "," << r.cr_tx << "," << r.fnr
            << "," << r.fpr << "," << r.sde << "," << r.executed_adc_samples << ","
            << r.compress_mults << "\n";
    }
}

}  // namespace ahs
