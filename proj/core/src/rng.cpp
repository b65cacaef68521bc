#include "branchlab/rng.hpp"

#include <cmath>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t c[4], std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n0 = hi1 ^ c[1] ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c[3] ^ k1;
    const std::uint32_t n3 = lo0;
    c[0] = n0;
    c[1] = n1;
    c[2] = n2;
    c[3] = n3;
}

// Stirling tail log(k!) - [ (k+1/2)log(k+1) - (k+1) + log(sqrt(2 pi)) ],
// the correction used by the BTRS acceptance bound.
double stirling_tail(double k) {
    static const double tail[] = {
        0.0810614667953272,  0.0413406959554092,  0.0276779256849983,
        0.02079067210376509, 0.0166446911898211,  0.0138761288230707,
        0.0118967099458917,  0.0104112652619720,  0.00925546218271273,
        0.00833056343336287};
    if (k <= 9.0) return tail[static_cast<int>(k)];
    const double kp1sq = (k + 1.0) * (k + 1.0);
    return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / (k + 1.0);
}

}  // namespace

void Rng::refill() {
    std::uint32_t c[4] = {static_cast<std::uint32_t>(counter_),
                          static_cast<std::uint32_t>(counter_ >> 32),
                          static_cast<std::uint32_t>(stream_),
                          static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
        philox_round(c, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    buf_[0] = c[0];
    buf_[1] = c[1];
    buf_[2] = c[2];
    buf_[3] = c[3];
    buf_pos_ = 0;
    ++counter_;
}

std::uint32_t Rng::next_u32() {
    if (buf_pos_ >= 4) refill();
    return buf_[buf_pos_++];
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double Rng::normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

double Rng::exponential() { return -std::log(uniform_open()); }

std::uint64_t Rng::poisson(double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda)) throw Error("invalid argument: poisson mean");
    if (lambda == 0.0) return 0;
    if (lambda < 10.0) {
        // Multiplicative inversion; expected lambda + 1 uniforms.
        const double limit = std::exp(-lambda);
        double prod = 1.0;
        std::uint64_t k = 0;
        for (;;) {
            prod *= uniform_open();
            if (prod <= limit) return k;
            ++k;
        }
    }
    // PTRS transformed rejection (handles all lambda >= 10).
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_lambda = std::log(lambda);
    for (;;) {
        const double u = uniform() - 0.5;
        const double v = uniform_open();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            kf * log_lambda - lambda - std::lgamma(kf + 1.0)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

std::uint64_t Rng::binomial(std::uint64_t n, double q) {
    if (q < 0.0 || q > 1.0 || !std::isfinite(q)) throw Error("invalid argument: binomial probability");
    if (n == 0 || q == 0.0) return 0;
    if (q == 1.0) return n;
    if (q > 0.5) return n - binomial(n, 1.0 - q);

    const double nq = static_cast<double>(n) * q;
    if (nq < 10.0) {
        // CDF inversion via the pmf recurrence; nq < 10 and q <= 1/2 keep
        // (1-q)^n above e^{-20}, no underflow.
        const double s = q / (1.0 - q);
        double pmf = std::pow(1.0 - q, static_cast<double>(n));
        double cdf = pmf;
        const double u = uniform();
        std::uint64_t k = 0;
        while (u > cdf && k < n) {
            pmf *= s * (static_cast<double>(n - k)) / (static_cast<double>(k + 1));
            cdf += pmf;
            ++k;
        }
        return k;
    }

    // BTRS transformed rejection.
    const double nd = static_cast<double>(n);
    const double spq = std::sqrt(nd * q * (1.0 - q));
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * q;
    const double c = nd * q + 0.5;
    const double v_r = 0.92 - 4.2 / b;
    const double r = q / (1.0 - q);
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double m = std::floor((nd + 1.0) * q);
    for (;;) {
        const double u = uniform() - 0.5;
        double v = uniform_open();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + c);
        if (kf < 0.0 || kf > nd) continue;
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        v = std::log(v * alpha / (a / (us * us) + b));
        const double ub = (m + 0.5) * std::log((m + 1.0) / (r * (nd - m + 1.0))) +
                          (nd + 1.0) * std::log((nd - m + 1.0) / (nd - kf + 1.0)) +
                          (kf + 0.5) * std::log(r * (nd - kf + 1.0) / (kf + 1.0)) +
                          stirling_tail(m) + stirling_tail(nd - m) - stirling_tail(kf) -
                          stirling_tail(nd - kf);
        if (v <= ub) return static_cast<std::uint64_t>(kf);
    }
}

double Rng::gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) throw Error("invalid argument: gamma parameters");
    if (shape < 1.0) {
        const double boost = std::pow(uniform_open(), 1.0 / shape);
        return gamma(shape + 1.0, scale) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

}  // namespace branchlab
