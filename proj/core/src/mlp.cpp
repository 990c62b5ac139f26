#include "ahs/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ahs/detect.hpp"
#include "ahs/rng.hpp"

namespace ahs {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

std::vector<double> PredictorInput::features() const {
    std::vector<double> f;
    f.reserve(7 + kTemplateLength);
    f.push_back(rate_norm);
    // log scale puts detection margins within linear reach of the first
    // layer; raw sigma counts span 1..60
    f.push_back(std::log(std::max(threshold_norm, 1e-3)));
    f.push_back(peak_snr_log);
    f.push_back(margin_log);
    f.push_back(ring_margin_log);
    f.push_back(margin_sigmas);
    f.push_back(ring_sigmas);
    f.insert(f.end(), template_shape.begin(), template_shape.end());
    return f;
}

PredictorInput PredictorInput::make(const SpikeTemplate& tmpl, double rate_norm,
                                    double threshold_sigmas, double noise_sigma_uv) {
    if (!(rate_norm > 0.0) || rate_norm > 1.0 + 1e-12) {
        throw std::invalid_argument("PredictorInput: rate_norm must lie in (0, 1]");
    }
    if (!(noise_sigma_uv > 0.0)) throw std::invalid_argument("PredictorInput: sigma must be > 0");
    const double peak = tmpl.peak_magnitude_uv();
    if (!(peak > 0.0)) throw std::invalid_argument("PredictorInput: degenerate template");
    if (tmpl.waveform_uv.size() != kTemplateLength) {
        throw std::invalid_argument("PredictorInput: template length mismatch");
    }
    PredictorInput in;
    in.rate_norm = std::min(rate_norm, 1.0);
    in.threshold_norm = std::abs(threshold_sigmas);
    in.peak_snr_log = std::log(peak / noise_sigma_uv);
    const double rate = in.rate_norm * tmpl.base_rate_hz;
    const TemplateResponse resp = filtered_template_response(tmpl, BandpassSpec{}, rate);
    const double threshold_uv = in.threshold_norm * noise_sigma_uv;
    const double log_th = std::log(std::max(threshold_uv, 1e-6));
    in.margin_log = std::log(std::max(resp.peak, 1e-6)) - log_th;
    in.ring_margin_log = std::log(std::max(resp.ring, 1e-6)) - log_th;
    // signed sigma margins, squashed so the saturated far field stays flat
    in.margin_sigmas = std::tanh((resp.peak - threshold_uv) / (8.0 * noise_sigma_uv));
    in.ring_sigmas = std::tanh((threshold_uv - resp.ring) / (8.0 * noise_sigma_uv));
    for (std::size_t i = 0; i < kTemplateLength; ++i) {
        in.template_shape[i] = tmpl.waveform_uv[i] / peak;
    }
    return in;
}

MlpModel MlpModel::init(std::size_t input_dim, std::uint64_t seed) {
    if (input_dim == 0) throw std::invalid_argument("MlpModel: input dim must be > 0");
    MlpModel m;
    m.input_dim_ = input_dim;
    m.dims_ = {input_dim, kHidden1, kHidden2, kOutputs};
    Rng rng(seed);
    for (std::size_t l = 0; l < 3; ++l) {
        const std::size_t fan_in = m.dims_[l];
        const std::size_t fan_out = m.dims_[l + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        m.weights_[l].resize(fan_in * fan_out);
        for (auto& w : m.weights_[l]) w = rng.uniform(-a, a);
        // output biases start near the low-error mass of the targets; from
        // logit 0 the logistic units crawl for thousands of epochs
        m.biases_[l].assign(fan_out, l == 2 ? -3.0 : 0.0);
    }
    return m;
}

std::array<double, MlpModel::kOutputs> MlpModel::forward(const std::vector<double>& x) const {
    if (x.size() != input_dim_) throw std::invalid_argument("MlpModel: input dimension mismatch");
    std::vector<double> act = x;
    for (std::size_t l = 0; l < 3; ++l) {
        const std::size_t in_dim = dims_[l];
        const std::size_t out_dim = dims_[l + 1];
        std::vector<double> next(out_dim);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double z = biases_[l][o];
            const double* row = &weights_[l][o * in_dim];
            for (std::size_t i = 0; i < in_dim; ++i) z += row[i] * act[i];
            next[o] = l < 2 ? std::max(0.0, z) : logistic(z);
        }
        act = std::move(next);
    }
    return {act[0], act[1]};
}

ErrorEstimate MlpModel::predict(const PredictorInput& input) const {
    const auto y = forward(input.features());
    return ErrorEstimate{y[0], y[1]};
}

double MlpModel::loss(const TrainingSample& s) const {
    const auto y = forward(s.input.features());
    const double d0 = y[0] - s.target.fnr;
    const double d1 = y[1] - s.target.fpr;
    return 0.5 * (d0 * d0 + d1 * d1);
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < 3; ++l) n += weights_[l].size() + biases_[l].size();
    return n;
}

double& MlpModel::parameter(std::size_t i) {
    for (std::size_t l = 0; l < 3; ++l) {
        if (i < weights_[l].size()) return weights_[l][i];
        i -= weights_[l].size();
        if (i < biases_[l].size()) return biases_[l][i];
        i -= biases_[l].size();
    }
    throw std::out_of_range("MlpModel: parameter index");
}

double MlpModel::parameter(std::size_t i) const {
    return const_cast<MlpModel*>(this)->parameter(i);
}

void MlpModel::accumulate_gradient(const TrainingSample& s, std::vector<double>& grad) const {
    if (grad.size() != parameter_count()) throw std::invalid_argument("gradient buffer size");
    const std::vector<double> x = s.input.features();

    // forward pass, keeping activations
    std::array<std::vector<double>, 4> act;
    std::array<std::vector<double>, 3> pre;
    act[0] = x;
    for (std::size_t l = 0; l < 3; ++l) {
        const std::size_t in_dim = dims_[l];
        const std::size_t out_dim = dims_[l + 1];
        pre[l].resize(out_dim);
        act[l + 1].resize(out_dim);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double z = biases_[l][o];
            const double* row = &weights_[l][o * in_dim];
            for (std::size_t i = 0; i < in_dim; ++i) z += row[i] * act[l][i];
            pre[l][o] = z;
            act[l + 1][o] = l < 2 ? std::max(0.0, z) : logistic(z);
        }
    }

    // delta at the output: (y - t) * y * (1 - y)
    std::vector<double> delta(kOutputs);
    const double t[2] = {s.target.fnr, s.target.fpr};
    for (std::size_t o = 0; o < kOutputs; ++o) {
        const double y = act[3][o];
        delta[o] = (y - t[o]) * y * (1.0 - y);
    }

    std::size_t bias_base[3];
    std::size_t weight_base[3];
    {
        std::size_t off = 0;
        for (std::size_t l = 0; l < 3; ++l) {
            weight_base[l] = off;
            off += weights_[l].size();
            bias_base[l] = off;
            off += biases_[l].size();
        }
    }

    for (std::size_t l = 3; l-- > 0;) {
        const std::size_t in_dim = dims_[l];
        const std::size_t out_dim = dims_[l + 1];
        for (std::size_t o = 0; o < out_dim; ++o) {
            grad[bias_base[l] + o] += delta[o];
            const std::size_t row = weight_base[l] + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) grad[row + i] += delta[o] * act[l][i];
        }
        if (l == 0) break;
        std::vector<double> prev(in_dim, 0.0);
        for (std::size_t i = 0; i < in_dim; ++i) {
            double d = 0.0;
            for (std::size_t o = 0; o < out_dim; ++o) d += weights_[l][o * in_dim + i] * delta[o];
            prev[i] = pre[l - 1][i] > 0.0 ? d : 0.0;  // rectifier gate
        }
        delta = std::move(prev);
    }
}

TrainResult train(const std::vector<TrainingSample>& train_set, const TrainHyperparams& hp) {
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    const std::size_t input_dim = train_set.front().input.features().size();
    for (const auto& s : train_set) {
        if (s.target.fnr < 0.0 || s.target.fnr > 1.0 || s.target.fpr < 0.0 || s.target.fpr > 1.0) {
            throw std::invalid_argument("train: targets must lie in [0, 1]");
        }
    }

    Rng rng(hp.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(hp.validation_fraction * static_cast<double>(order.size())));
    n_val = std::min(n_val, order.size() - 1);
    if (n_val == 0 && order.size() >= 10) n_val = 1;

    std::vector<TrainingSample> val;
    std::vector<TrainingSample> fit;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_val ? val : fit).push_back(train_set[order[i]]);
    }
    if (val.empty()) val = fit;  // degenerate tiny sets

    MlpModel model = MlpModel::init(input_dim, mix_seed(hp.seed, 11));
    TrainResult result;
    result.model = model;
    result.best_epoch = 0;
    result.best_validation_mse = evaluate_mse(model, val);

    std::vector<std::size_t> batch_order(fit.size());
    std::iota(batch_order.begin(), batch_order.end(), 0);
    std::vector<double> grad(model.parameter_count());
    std::vector<double> velocity(model.parameter_count(), 0.0);

    std::size_t since_best = 0;
    double lr = hp.learning_rate;
    for (std::size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
        if (hp.lr_decay_every > 0 && epoch > 1 && (epoch - 1) % hp.lr_decay_every == 0) {
            lr *= hp.lr_decay;
        }
        for (std::size_t i = batch_order.size(); i > 1; --i) {
            std::swap(batch_order[i - 1], batch_order[rng.below(i)]);
        }
        for (std::size_t start = 0; start < batch_order.size(); start += hp.batch_size) {
            const std::size_t end = std::min(start + hp.batch_size, batch_order.size());
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto& sample = fit[batch_order[i]];
                model.accumulate_gradient(sample, grad);
                batch_loss += model.loss(sample);
            }
            if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch);
            const double scale = lr / static_cast<double>(end - start);
            for (std::size_t p = 0; p < grad.size(); ++p) {
                velocity[p] = hp.momentum * velocity[p] - scale * grad[p];
                model.parameter(p) += velocity[p];
            }
        }

        const double val_mse = evaluate_mse(model, val);
        if (!std::isfinite(val_mse)) throw TrainingDiverged(epoch);
        result.epochs_run = epoch;
        if (val_mse < result.best_validation_mse) {
            result.best_validation_mse = val_mse;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= hp.patience) {
            break;
        }
    }
    return result;
}

double evaluate_mse(const MlpModel& model, const std::vector<TrainingSample>& set) {
    if (set.empty()) throw std::invalid_argument("evaluate_mse: empty set");
    double acc = 0.0;
    for (const auto& s : set) {
        const auto y = model.forward(s.input.features());
        const double d0 = y[0] - s.target.fnr;
        const double d1 = y[1] - s.target.fpr;
        acc += d0 * d0 + d1 * d1;
    }
    return acc / (2.0 * static_cast<double>(set.size()));
}

std::array<double, 2> evaluate_mae(const MlpModel& model, const std::vector<TrainingSample>& set) {
    if (set.empty()) throw std::invalid_argument("evaluate_mae: empty set");
    double fnr_err = 0.0;
    double fpr_err = 0.0;
    for (const auto& s : set) {
        const auto y = model.forward(s.input.features());
        fnr_err += std::abs(y[0] - s.target.fnr);
        fpr_err += std::abs(y[1] - s.target.fpr);
    }
    const auto n = static_cast<double>(set.size());
    return {fnr_err / n, fpr_err / n};
}

double gradient_check(const MlpModel& model, const TrainingSample& sample) {
    std::vector<double> analytic(model.parameter_count(), 0.0);
    model.accumulate_gradient(sample, analytic);

    const double h = 1e-5;
    double worst = 0.0;
    MlpModel probe = model;
    for (std::size_t p = 0; p < probe.parameter_count(); ++p) {
        const double saved = probe.parameter(p);
        probe.parameter(p) = saved + h;
        const double lp = probe.loss(sample);
        probe.parameter(p) = saved - h;
        const double lm = probe.loss(sample);
        probe.parameter(p) = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double scale = std::max({std::abs(analytic[p]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic[p] - numeric) / scale);
    }
    return worst;
}

void MlpModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("MlpModel::save: cannot open " + path);
    out.write("AQMLP1", 6);
    write_u32(out, 3);
    for (std::size_t l = 0; l < 3; ++l) {
        write_u32(out, static_cast<std::uint32_t>(dims_[l]));
        write_u32(out, static_cast<std::uint32_t>(dims_[l + 1]));
        const std::uint8_t activation = l < 2 ? 0 : 1;  // 0 = relu, 1 = logistic
        out.write(reinterpret_cast<const char*>(&activation), 1);
        out.write(reinterpret_cast<const char*>(weights_[l].data()),
                  static_cast<std::streamsize>(weights_[l].size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(biases_[l].data()),
                  static_cast<std::streamsize>(biases_[l].size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("MlpModel::save: short write to " + path);
}

MlpModel MlpModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("MlpModel::load: cannot open " + path);
    char magic[6] = {};
    in.read(magic, 6);
    if (!in || std::memcmp(magic, "AQMLP1", 6) != 0) {
        throw std::runtime_error("MlpModel::load: bad magic");
    }
    if (read_u32(in) != 3) throw std::runtime_error("MlpModel::load: unexpected layer count");

    MlpModel m;
    for (std::size_t l = 0; l < 3; ++l) {
        const std::uint32_t in_dim = read_u32(in);
        const std::uint32_t out_dim = read_u32(in);
        std::uint8_t activation = 0;
        in.read(reinterpret_cast<char*>(&activation), 1);
        if ((l < 2 && activation != 0) || (l == 2 && activation != 1)) {
            throw std::runtime_error("MlpModel::load: unexpected activation tag");
        }
        m.dims_[l] = in_dim;
        m.dims_[l + 1] = out_dim;
        m.weights_[l].resize(static_cast<std::size_t>(in_dim) * out_dim);
        m.biases_[l].resize(out_dim);
        in.read(reinterpret_cast<char*>(m.weights_[l].data()),
                static_cast<std::streamsize>(m.weights_[l].size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(m.biases_[l].data()),
                static_cast<std::streamsize>(m.biases_[l].size() * sizeof(double)));
    }
    if (!in) throw std::runtime_error("MlpModel::load: truncated file");
    if (m.dims_[1] != kHidden1 || m.dims_[2] != kHidden2 || m.dims_[3] != kOutputs) {
        throw std::runtime_error("MlpModel::load: unexpected topology");
    }
    m.input_dim_ = m.dims_[0];
    return m;
}

}  // namespace ahs
