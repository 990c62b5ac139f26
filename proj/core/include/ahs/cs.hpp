#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace ahs {

struct CsConfig {
    std::size_t block_len = 128;       // N
    std::size_t n_measurements = 32;   // M <= N
    std::uint64_t sensing_seed = 7;
    std::size_t sparsity_k = 8;        // OMP iterations
    bool identity_sensing = false;     // test hook; requires M == N

    void validate() const;
    double compression_ratio() const {
        return static_cast<double>(block_len) / static_cast<double>(n_measurements);
    }
};

// Seeded Gaussian sensing matrix with unit-norm rows, row-major M x N.
std::vector<double> make_sensing_matrix(const CsConfig& cfg);

// Caches the sensing matrix and the sensed DCT dictionary so block streams
// don't pay the setup cost per block.
class CsCodec {
public:
    explicit CsCodec(const CsConfig& cfg);
    ~CsCodec();
    CsCodec(CsCodec&&) noexcept;
    CsCodec& operator=(CsCodec&&) noexcept;

    // y = Phi x
    std::vector<double> compress(std::span<const double> block) const;
    // orthogonal matching pursuit in the DCT dictionary, sparsity_k
    // iterations; best-effort densified estimate
    std::vector<double> decompress(std::span<const double> measurements) const;

    const CsConfig& config() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<double> cs_compress(std::span<const double> block, const CsConfig& cfg);
std::vector<double> cs_decompress(std::span<const double> measurements, const CsConfig& cfg);

inline std::uint64_t cs_payload_bits(const CsConfig& cfg) {
    return static_cast<std::uint64_t>(cfg.n_measurements) * 16;
}

}  // namespace ahs
