#include "ahs/cs.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "ahs/dct.hpp"
#include "ahs/rng.hpp"

namespace ahs {

void CsConfig::validate() const {
    if (block_len == 0) throw std::invalid_argument("CsConfig: block_len must be > 0");
    if (n_measurements == 0 || n_measurements > block_len) {
        throw std::invalid_argument("CsConfig: need 1 <= M <= N");
    }
    if (sparsity_k == 0 || sparsity_k > n_measurements) {
        throw std::invalid_argument("CsConfig: need 1 <= sparsity_k <= M");
    }
    if (identity_sensing && n_measurements != block_len) {
        throw std::invalid_argument("CsConfig: identity sensing requires M == N");
    }
}

std::vector<double> make_sensing_matrix(const CsConfig& cfg) {
    cfg.validate();
    const std::size_t m = cfg.n_measurements;
    const std::size_t n = cfg.block_len;
    std::vector<double> phi(m * n, 0.0);
    if (cfg.identity_sensing) {
        for (std::size_t i = 0; i < m; ++i) phi[i * n + i] = 1.0;
        return phi;
    }
    Rng rng(cfg.sensing_seed);
    for (std::size_t r = 0; r < m; ++r) {
        double norm_sq = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double v = rng.gaussian();
            phi[r * n + c] = v;
            norm_sq += v * v;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t c = 0; c < n; ++c) phi[r * n + c] *= inv;
    }
    return phi;
}

struct CsCodec::Impl {
    CsConfig cfg;
    Dct dct;
    Eigen::MatrixXd phi;        // M x N
    Eigen::MatrixXd dict;       // M x N, Phi * Psi^T
    Eigen::VectorXd col_norms;  // of dict columns

    explicit Impl(const CsConfig& config) : cfg(config), dct(config.block_len) {
        cfg.validate();
        const auto m = static_cast<Eigen::Index>(cfg.n_measurements);
        const auto n = static_cast<Eigen::Index>(cfg.block_len);
        const auto raw = make_sensing_matrix(cfg);
        phi = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(raw.data(), m, n);
        dict.resize(m, n);
        std::vector<double> unit(cfg.block_len, 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            unit[static_cast<std::size_t>(j)] = 1.0;
            const auto atom = dct.inverse(unit);  // time-domain DCT atom
            unit[static_cast<std::size_t>(j)] = 0.0;
            dict.col(j) = phi * Eigen::Map<const Eigen::VectorXd>(atom.data(), n);
        }
        col_norms.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double nrm = dict.col(j).norm();
            col_norms(j) = nrm > 0.0 ? nrm : 1.0;
        }
    }
};

CsCodec::CsCodec(const CsConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
CsCodec::~CsCodec() = default;
CsCodec::CsCodec(CsCodec&&) noexcept = default;
CsCodec& CsCodec::operator=(CsCodec&&) noexcept = default;

const CsConfig& CsCodec::config() const { return impl_->cfg; }

std::vector<double> CsCodec::compress(std::span<const double> block) const {
    const auto& cfg = impl_->cfg;
    if (block.size() != cfg.block_len) throw std::invalid_argument("cs compress: length mismatch");
    const Eigen::Map<const Eigen::VectorXd> x(block.data(),
                                              static_cast<Eigen::Index>(cfg.block_len));
    const Eigen::VectorXd y = impl_->phi * x;
    return {y.data(), y.data() + y.size()};
}

std::vector<double> CsCodec::decompress(std::span<const double> measurements) const {
    const auto& cfg = impl_->cfg;
    if (measurements.size() != cfg.n_measurements) {
        throw std::invalid_argument("cs decompress: measurement length mismatch");
    }
    const auto m = static_cast<Eigen::Index>(cfg.n_measurements);
    const auto n = static_cast<Eigen::Index>(cfg.block_len);
    const auto& dict = impl_->dict;

    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) y(i) = measurements[static_cast<std::size_t>(i)];

    Eigen::VectorXd residual = y;
    std::vector<Eigen::Index> support;
    std::vector<bool> in_support(cfg.block_len, false);
    Eigen::VectorXd solution;
    const double y_norm = y.norm();

    for (std::size_t it = 0; it < cfg.sparsity_k; ++it) {
        if (residual.norm() <= 1e-12 * std::max(1.0, y_norm)) break;
        Eigen::Index best = -1;
        double best_corr = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (in_support[static_cast<std::size_t>(j)]) continue;
            const double corr = std::abs(dict.col(j).dot(residual)) / impl_->col_norms(j);
            if (corr > best_corr) {
                best_corr = corr;
                best = j;
            }
        }
        if (best < 0) break;
        support.push_back(best);
        in_support[static_cast<std::size_t>(best)] = true;

        Eigen::MatrixXd sub(m, static_cast<Eigen::Index>(support.size()));
        for (std::size_t k = 0; k < support.size(); ++k) {
            sub.col(static_cast<Eigen::Index>(k)) = dict.col(support[k]);
        }
        solution = sub.colPivHouseholderQr().solve(y);
        residual = y - sub * solution;
    }

    std::vector<double> coeffs(cfg.block_len, 0.0);
    for (std::size_t k = 0; k < support.size(); ++k) {
        coeffs[static_cast<std::size_t>(support[k])] = solution(static_cast<Eigen::Index>(k));
    }
    return impl_->dct.inverse(coeffs);
}

std::vector<double> cs_compress(std::span<const double> block, const CsConfig& cfg) {
    return CsCodec(cfg).compress(block);
}

std::vector<double> cs_decompress(std::span<const double> measurements, const CsConfig& cfg) {
    return CsCodec(cfg).decompress(measurements);
}

}  // namespace ahs
