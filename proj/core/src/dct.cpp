#include "ahs/dct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ahs {

void DctConfig::validate() const {
    if (block_len == 0) throw std::invalid_argument("DctConfig: block_len must be > 0");
    if (keep_k == 0 || keep_k > block_len) {
        throw std::invalid_argument("DctConfig: need 1 <= keep_k <= block_len");
    }
    if (block_len > 65536) throw std::invalid_argument("DctConfig: block too large for u16 indices");
}

Dct::Dct(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("Dct: n must be > 0");
    basis_.resize(n * n);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
    const double norm = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const double alpha = k == 0 ? norm0 : norm;
        for (std::size_t i = 0; i < n; ++i) {
            basis_[k * n + i] =
                alpha * std::cos(M_PI * (2.0 * static_cast<double>(i) + 1.0) *
                                 static_cast<double>(k) / (2.0 * static_cast<double>(n)));
        }
    }
}

std::vector<double> Dct::forward(std::span<const double> block) const {
    if (block.size() != n_) throw std::invalid_argument("Dct::forward: block length mismatch");
    std::vector<double> coeffs(n_);
    for (std::size_t k = 0; k < n_; ++k) {
        const double* row = &basis_[k * n_];
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) acc += row[i] * block[i];
        coeffs[k] = acc;
    }
    return coeffs;
}

std::vector<double> Dct::inverse(std::span<const double> coeffs) const {
    if (coeffs.size() != n_) throw std::invalid_argument("Dct::inverse: length mismatch");
    std::vector<double> block(n_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
        if (coeffs[k] == 0.0) continue;
        const double* row = &basis_[k * n_];
        for (std::size_t i = 0; i < n_; ++i) block[i] += coeffs[k] * row[i];
    }
    return block;
}

namespace {

const Dct& cached_dct(std::size_t n) {
    thread_local std::vector<std::pair<std::size_t, Dct>> cache;
    for (const auto& entry : cache) {
        if (entry.first == n) return entry.second;
    }
    cache.emplace_back(n, Dct(n));
    return cache.back().second;
}

}  // namespace

DctCoeffs dct_compress(std::span<const double> block, const DctConfig& cfg) {
    cfg.validate();
    if (block.size() != cfg.block_len) throw std::invalid_argument("dct_compress: length mismatch");
    const auto coeffs = cached_dct(cfg.block_len).forward(block);

    std::vector<std::size_t> order(coeffs.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.keep_k),
                      order.end(), [&coeffs](std::size_t a, std::size_t b) {
                          const double ma = std::abs(coeffs[a]);
                          const double mb = std::abs(coeffs[b]);
                          return ma != mb ? ma > mb : a < b;
                      });

    DctCoeffs out;
    out.indices.reserve(cfg.keep_k);
    out.values.reserve(cfg.keep_k);
    for (std::size_t j = 0; j < cfg.keep_k; ++j) {
        out.indices.push_back(static_cast<std::uint16_t>(order[j]));
        out.values.push_back(coeffs[order[j]]);
    }
    return out;
}

std::vector<double> dct_decompress(const DctCoeffs& coeffs, const DctConfig& cfg) {
    cfg.validate();
    if (coeffs.indices.size() != coeffs.values.size()) {
        throw std::invalid_argument("dct_decompress: index/value length mismatch");
    }
    std::vector<double> dense(cfg.block_len, 0.0);
    std::vector<bool> seen(cfg.block_len, false);
    for (std::size_t j = 0; j < coeffs.indices.size(); ++j) {
        const std::size_t k = coeffs.indices[j];
        if (k >= cfg.block_len || seen[k]) {
            throw std::invalid_argument("dct_decompress: malformed coefficient indices");
        }
        seen[k] = true;
        dense[k] = coeffs.values[j];
    }
    return cached_dct(cfg.block_len).inverse(dense);
}

}  // namespace ahs
