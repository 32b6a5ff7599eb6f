#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace beltsync::rng {

namespace detail {
// SplitMix64 finalizer (Steele, Lea, Flood 2014). Full-period, well mixed.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

// Counter-derived deterministic stream: the state is a pure function of
// (seed, a, b, c), so independent draws can be reproduced in any order.
class Stream {
  public:
    static Stream derive(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
        std::uint64_t s = detail::mix64(seed);
        s = detail::mix64(s ^ (a + 0x243f6a8885a308d3ULL));
        s = detail::mix64(s ^ (b + 0x13198a2e03707344ULL));
        s = detail::mix64(s ^ (c + 0xa4093822299f31d0ULL));
        return Stream(s);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1], safe for log()
    double next_unit_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; draws two uniforms, discards the twin
    double next_normal() {
        const double u1 = next_unit_pos();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    explicit Stream(std::uint64_t s) : state_(s) {}
    std::uint64_t state_;
};

namespace detail {

// Knuth's product method; fine for small means.
inline std::uint64_t poisson_small(double mean, Stream& rng) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.next_unit_pos();
    while (prod > limit) {
        ++k;
        prod *= rng.next_unit_pos();
    }
    return k;
}

// Hormann's PTRS transformed-rejection sampler, valid for mean >= 10.
inline std::uint64_t poisson_ptrs(double mean, Stream& rng) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.next_unit() - 0.5;
        const double v = rng.next_unit_pos();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + kf * loglam - std::lgamma(kf + 1.0)) {
            return static_cast<std::uint64_t>(kf);
        }
    }
}

} // namespace detail

inline std::uint64_t poisson_count(double mean, Stream& rng) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson_count: mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) return detail::poisson_small(mean, rng);
    return detail::poisson_ptrs(mean, rng);
}

// Binomial(n,p). Exact for small n or small n*min(p,1-p); Gaussian tail
// approximation (rounded, clamped) once counts are large enough that the
// shot-noise statistics are indistinguishable for our purposes.
inline std::uint64_t binomial_count(std::uint64_t n, double p, Stream& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_count: p outside [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    const bool flipped = p > 0.5;
    const double q = flipped ? 1.0 - p : p;
    std::uint64_t successes = 0;
    const double nq = static_cast<double>(n) * q;
    if (n <= 64) {
        for (std::uint64_t i = 0; i < n; ++i)
            if (rng.next_unit() < q) ++successes;
    } else if (nq <= 30.0) {
        // waiting-time (geometric gaps) method, exact, O(n*q) expected
        const double c = std::log1p(-q);
        double y = 0.0;
        for (;;) {
            y += std::floor(std::log(rng.next_unit_pos()) / c) + 1.0;
            if (y > static_cast<double>(n)) break;
            ++successes;
        }
    } else {
        const double mu = nq;
        const double sigma = std::sqrt(nq * (1.0 - q));
        double k = std::floor(mu + sigma * rng.next_normal() + 0.5);
        if (k < 0.0) k = 0.0;
        if (k > static_cast<double>(n)) k = static_cast<double>(n);
        successes = static_cast<std::uint64_t>(k);
    }
    return flipped ? n - successes : successes;
}

} // namespace beltsync::rng
