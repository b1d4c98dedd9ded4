// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qkd::rng {

/// SplitMix64 finalizer (Steele, Lea, Flood, OOPSLA 2014). Bijective on u64.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based stream addressed by (seed, index). Draws from a stream
/// depend only on (seed, index, draw number), never on other streams, so
/// per-pulse results are independent of how pulses are partitioned across
/// batches or threads.
class Stream {
  public:
    Stream(std::uint64_t seed, std::uint64_t index) noexcept
        : key_(mix64(mix64(seed ^ 0xd1b54a32d192ed03ULL) ^
                     (index * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL))) {}

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Uniform integer in [0, n). n must be small (modulo bias < 2^-59 for n <= 16).
    std::uint32_t uniform_int(std::uint32_t n) noexcept {
        return static_cast<std::uint32_t>(next_u64() % n);
    }

    /// Random bit as 0/1.
    int bit() noexcept { return static_cast<int>(next_u64() >> 63); }

    /// Exact Poisson sample by the multiplication method, chunked so the
    /// e^-mean threshold never underflows. Cost is O(mean) uniforms.
    std::uint64_t poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean))
            throw std::invalid_argument("rng::Stream::poisson: mean must be finite and >= 0");
        std::uint64_t total = 0;
        while (mean > 0.0) {
            const double chunk = mean > 500.0 ? 500.0 : mean;
            mean -= chunk;
            const double limit = std::exp(-chunk);
            double prod = 1.0;
            std::uint64_t k = 0;
            for (;;) {
                prod *= uniform();
                if (prod <= limit) break;
                ++k;
            }
            total += k;
        }
        return total;
    }

    /// Sample index 0..3 from four (not necessarily normalized) weights.
    int categorical4(const std::array<double, 4>& w) noexcept {
        const double total = w[0] + w[1] + w[2] + w[3];
        double u = uniform() * total;
        for (int i = 0; i < 3; ++i) {
            if (u < w[i]) return i;
            u -= w[i];
        }
        return 3;
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace qkd::rng
