#pragma once

#include <cstdint>

namespace branchlab {

// Counter-based generator (Philox4x32-10). A stream is addressed by
// (seed, stream_id); distinct stream ids select disjoint counter prefixes
// under the same key, so per-replicate streams never overlap and results do
// not depend on thread scheduling.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream_id)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          stream_(stream_id) {}

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on [0,1) with 53 random bits.
    double uniform();
    // Uniform on (0,1), safe under log().
    double uniform_open();

    // Standard normal via Box-Muller; consumes two uniforms per call.
    double normal();

    double exponential();                       // mean 1
    std::uint64_t poisson(double lambda);       // inversion < 10, PTRS otherwise
    std::uint64_t binomial(std::uint64_t n, double q);  // inversion / BTRS
    double gamma(double shape, double scale);   // Marsaglia-Tsang

private:
    void refill();

    std::uint32_t key0_, key1_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint32_t buf_[4] = {0, 0, 0, 0};
    int buf_pos_ = 4;
};

}  // namespace branchlab
