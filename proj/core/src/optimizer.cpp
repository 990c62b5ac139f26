#include "ahs/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ahs/detect.hpp"
#include "ahs/parallel.hpp"

namespace ahs {

void OptimizerSettings::validate() const {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw std::invalid_argument("OptimizerSettings: epsilon must lie in (0, 1)");
    }
    factor_set.validate();
    if (threshold_grid_sigmas.empty() && corridor_fractions.empty()) {
        throw std::invalid_argument("OptimizerSettings: empty threshold grid");
    }
    for (double s : threshold_grid_sigmas) {
        if (!(s < 0.0)) throw std::invalid_argument("OptimizerSettings: thresholds must be negative");
    }
    for (double f : corridor_fractions) {
        if (!(f > 0.0) || !(f < 1.0)) {
            throw std::invalid_argument("OptimizerSettings: corridor fractions must lie in (0, 1)");
        }
    }
}

ElectrodeSchedule optimize_electrode(const SpikeTemplate& tmpl, double noise_sigma_uv,
                                     const MlpModel& model, const OptimizerSettings& settings,
                                     const ClockPlan& plan) {
    settings.validate();
    plan.validate();
    if (!(noise_sigma_uv > 0.0)) {
        throw std::invalid_argument("optimize_electrode: noise sigma must be > 0");
    }
    const double r_max = plan.r_max_hz();
    const double base_rate = tmpl.base_rate_hz;

    // threshold candidates in sigma units: the noise-anchored grid plus the
    // corridor-anchored ones scaled by this electrode's response and floor
    std::vector<double> threshold_sigmas = settings.threshold_grid_sigmas;
    if (!settings.corridor_fractions.empty()) {
        const TemplateResponse resp = filtered_template_response(tmpl);
        for (double frac : settings.corridor_fractions) {
            const double sigmas = corridor_threshold_uv(resp, frac) / noise_sigma_uv;
            threshold_sigmas.push_back(std::min(sigmas, settings.corridor_floor_sigmas));
        }
    }

    struct Candidate {
        int factor = 0;
        double threshold_sigma = 0.0;
        double predicted_total = 0.0;
    };
    Candidate best_feasible;
    Candidate fallback;  // minimum predicted error at factor 1
    bool have_feasible = false;
    bool have_fallback = false;

    for (int factor : settings.factor_set.factors) {
        const double realized = r_max / factor;
        const double rate_norm = std::min(1.0, realized / base_rate);
        for (double sigma : threshold_sigmas) {
            const PredictorInput input = PredictorInput::make(tmpl, rate_norm, sigma, noise_sigma_uv);
            const double predicted = total_error(model.predict(input));
            const Candidate cand{factor, sigma, predicted};

            if (factor == 1 && (!have_fallback || predicted < fallback.predicted_total)) {
                fallback = cand;
                have_fallback = true;
            }
            if (predicted > settings.epsilon) continue;
            if (!have_feasible || cand.factor > best_feasible.factor ||
                (cand.factor == best_feasible.factor &&
                 (cand.predicted_total < best_feasible.predicted_total ||
                  (cand.predicted_total == best_feasible.predicted_total &&
                   cand.threshold_sigma < best_feasible.threshold_sigma)))) {
                best_feasible = cand;
                have_feasible = true;
            }
        }
    }

    ElectrodeSchedule sched;
    sched.electrode_id = tmpl.electrode_id;
    if (have_feasible) {
        sched.factor = best_feasible.factor;
        sched.threshold_uv = best_feasible.threshold_sigma * noise_sigma_uv;
        sched.flagged = false;
    } else {
        sched.factor = 1;
        sched.threshold_uv = fallback.threshold_sigma * noise_sigma_uv;
        sched.flagged = true;
    }
    sched.realized_rate_hz = r_max / sched.factor;
    sched.target_rate_hz = sched.realized_rate_hz;
    return sched;
}

ConfigVector optimize_array(std::span<const SpikeTemplate> templates,
                            std::span<const double> noise_sigmas_uv, const MlpModel& model,
                            const OptimizerSettings& settings, const ClockPlan& plan) {
    if (templates.size() != noise_sigmas_uv.size()) {
        throw std::invalid_argument("optimize_array: one noise sigma per template required");
    }
    settings.validate();
    plan.validate();
    ConfigVector config;
    config.schedules.resize(templates.size());
    parallel_for(templates.size(), [&](std::size_t i) {
        config.schedules[i] =
            optimize_electrode(templates[i], noise_sigmas_uv[i], model, settings, plan);
    });
    return config;
}

void write_config_text(const ConfigVector& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_config_text: cannot open " + path);
    out << "# epoch " << config.epoch << "\n";
    out << "electrode_id,target_rate_hz,factor,threshold_uv,flagged\n";
    for (const auto& s : config.schedules) {
        out << s.electrode_id << "," << s.target_rate_hz << "," << s.factor << "," << s.threshold_uv
            << "," << (s.flagged ? 1 : 0) << "\n";
    }
}

ConfigVector read_config_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_config_text: cannot open " + path);
    ConfigVector config;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hdr(line.substr(1));
            std::string word;
            hdr >> word;
            if (word == "epoch") hdr >> config.epoch;
            continue;
        }
        if (line.rfind("electrode_id", 0) == 0) continue;
        std::istringstream row(line);
        std::string field;
        ElectrodeSchedule s;
        std::getline(row, field, ',');
        s.electrode_id = std::stoi(field);
        std::getline(row, field, ',');
        s.target_rate_hz = std::stod(field);
        std::getline(row, field, ',');
        s.factor = std::stoi(field);
        std::getline(row, field, ',');
        s.threshold_uv = std::stod(field);
        std::getline(row, field, ',');
        s.flagged = field == "1";
        s.realized_rate_hz = s.target_rate_hz;
        config.schedules.push_back(s);
    }
    return config;
}

}  // namespace ahs
