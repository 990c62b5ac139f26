#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ahs/trace.hpp"

namespace ahs {

// Candidate configuration + electrode template, as seen by the predictor.
// The template is peak-normalized, so the amplitude scale travels separately
// as log(peak / noise sigma); margin_log carries the detectability margin of
// the band-limited, band-passed template at the candidate rate, computed
// from the template and the filter spec alone.
struct PredictorInput {
    double rate_norm = 1.0;       // realized rate / base rate, in (0, 1]
    double threshold_norm = 4.0;  // |threshold| in noise sigmas; larger = stricter
    double peak_snr_log = 0.0;    // ln(template peak µV / noise sigma µV)
    double margin_log = 0.0;      // ln(filtered decimated peak) - ln(|threshold|)
    double ring_margin_log = 0.0;  // ln(post-trough ring lobe) - ln(|threshold|)
    double margin_sigmas = 0.0;    // (decimated peak - |threshold|) / sigma, squashed
    double ring_sigmas = 0.0;      // (|threshold| - ring lobe) / sigma, squashed
    std::array<double, kTemplateLength> template_shape{};  // peak magnitude == 1

    std::vector<double> features() const;
    static PredictorInput make(const SpikeTemplate& tmpl, double rate_norm,
                               double threshold_sigmas, double noise_sigma_uv);
};

struct ErrorEstimate {
    double fnr = 0.0;
    double fpr = 0.0;
};

struct TrainingSample {
    PredictorInput input;
    ErrorEstimate target;
};

struct TrainingDiverged : std::runtime_error {
    std::size_t epoch;
    explicit TrainingDiverged(std::size_t at)
        : std::runtime_error("training loss became non-finite at epoch " + std::to_string(at)),
          epoch(at) {}
};

// input -> 48 -> 24 -> 2, rectifier hidden units, logistic outputs.
class MlpModel {
public:
    static constexpr std::size_t kHidden1 = 48;
    static constexpr std::size_t kHidden2 = 24;
    static constexpr std::size_t kOutputs = 2;

    MlpModel() = default;
    static MlpModel init(std::size_t input_dim, std::uint64_t seed);

    std::size_t input_dim() const { return input_dim_; }
    std::array<double, kOutputs> forward(const std::vector<double>& x) const;
    ErrorEstimate predict(const PredictorInput& input) const;

    // 0.5 * sum of squared output errors for one sample
    double loss(const TrainingSample& s) const;

    // flat parameter access, layer by layer (weights row-major, then biases)
    std::size_t parameter_count() const;
    double& parameter(std::size_t i);
    double parameter(std::size_t i) const;

    // accumulate dLoss/dParam for one sample into grad (same flat layout)
    void accumulate_gradient(const TrainingSample& s, std::vector<double>& grad) const;

    void save(const std::string& path) const;
    static MlpModel load(const std::string& path);

    bool operator==(const MlpModel& other) const = default;

private:
    std::size_t input_dim_ = 0;
    // weights[l][out * in_dim + in]
    std::array<std::vector<double>, 3> weights_;
    std::array<std::vector<double>, 3> biases_;
    std::array<std::size_t, 4> dims_{};  // input, h1, h2, out
};

struct TrainHyperparams {
    double learning_rate = 0.03;
    double momentum = 0.9;
    double lr_decay = 0.5;              // multiplied in every lr_decay_every epochs
    std::size_t lr_decay_every = 3000;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 12000;
    std::size_t patience = 800;
    double validation_fraction = 0.10;
    std::uint64_t seed = 1;
};

struct TrainResult {
    MlpModel model;          // best-validation checkpoint
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;  // 0 = untouched initial model
    double best_validation_mse = 0.0;
};

TrainResult train(const std::vector<TrainingSample>& train_set, const TrainHyperparams& hp);

// mean squared error per output over a set
double evaluate_mse(const MlpModel& model, const std::vector<TrainingSample>& set);
// mean absolute error per output: {fnr_mae, fpr_mae}
std::array<double, 2> evaluate_mae(const MlpModel& model, const std::vector<TrainingSample>& set);

// analytic vs central finite-difference gradients (step 1e-5); returns the
// max deviation relative to max(|g|, 1e-6)
double gradient_check(const MlpModel& model, const TrainingSample& sample);

}  // namespace ahs
