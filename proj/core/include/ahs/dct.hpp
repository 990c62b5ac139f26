#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ahs {

struct DctConfig {
    std::size_t block_len = 128;
    std::size_t keep_k = 16;

    void validate() const;
};

// Orthonormal DCT-II / DCT-III pair over fixed-length blocks.
class Dct {
public:
    explicit Dct(std::size_t n);

    std::vector<double> forward(std::span<const double> block) const;
    std::vector<double> inverse(std::span<const double> coeffs) const;
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    std::vector<double> basis_;  // basis_[k * n + i] = alpha(k) cos(pi (2i+1) k / 2n)
};

struct DctCoeffs {
    std::vector<std::uint16_t> indices;
    std::vector<double> values;
};

// keep_k largest-magnitude coefficients (ties resolved toward lower index).
DctCoeffs dct_compress(std::span<const double> block, const DctConfig& cfg);
std::vector<double> dct_decompress(const DctCoeffs& coeffs, const DctConfig& cfg);

// serialized payload size used by the comparison report: index byte plus a
// 16-bit coefficient per kept entry
inline std::uint64_t dct_payload_bits(const DctConfig& cfg) {
    return static_cast<std::uint64_t>(cfg.keep_k) * (8 + 16);
}

}  // namespace ahs
