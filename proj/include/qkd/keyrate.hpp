// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "qkd/channel.hpp"

namespace qkd::keyrate {

/// Full parameter set of the asymptotic BBM92 rate model for an entangled
/// pair source (Ma, Fung, Lo, Phys. Rev. A 76, 012307 (2007)).
struct LinkParams {
    double mu = 0.03;        // mean pairs per pulse
    double eta_a = 0.042;    // overall transmittance, source -> Alice detection
    double eta_b = 0.0023;   // overall transmittance, source -> Bob detection
    double eta0_a = 0.042;   // Alice receiver-internal efficiency
    double eta0_b = 0.0023;  // Bob receiver-internal efficiency
    double y0a = 3.0e-5;     // Alice background yield per pulse
    double y0b = 2.0e-5;     // Bob background yield per pulse
    double e0 = 0.5;         // error rate of background clicks
    double ed = 0.015;       // intrinsic detector error rate
    double f_ec = 1.16;      // error-correction inefficiency f(E) >= 1
    double q = 0.5;          // basis-sift factor
    double rep_rate_hz = 1.0e8;

    void validate() const {
        auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (mu < 0.0) throw std::invalid_argument("link.mu must be >= 0");
        if (!unit(eta_a)) throw std::invalid_argument("link.eta_a must be in [0,1]");
        if (!unit(eta_b)) throw std::invalid_argument("link.eta_b must be in [0,1]");
        if (!unit(eta0_a)) throw std::invalid_argument("link.eta0_a must be in [0,1]");
        if (!unit(eta0_b)) throw std::invalid_argument("link.eta0_b must be in [0,1]");
        if (!unit(y0a)) throw std::invalid_argument("link.y0a must be in [0,1]");
        if (!unit(y0b)) throw std::invalid_argument("link.y0b must be in [0,1]");
        if (!unit(e0)) throw std::invalid_argument("link.e0 must be in [0,1]");
        if (!unit(ed)) throw std::invalid_argument("link.ed must be in [0,1]");
        if (f_ec < 1.0) throw std::invalid_argument("link.f_ec must be >= 1");
        if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("link.q must be in (0,1]");
        if (rep_rate_hz <= 0.0) throw std::invalid_argument("link.rep_rate_hz must be > 0");
    }
};

struct KeyRateResult {
    double gain = 0.0;                    // Q
    double qber = 0.0;                    // E
    double rate_per_pulse_raw = 0.0;      // q Q [1 - f(E) H2(E) - H2(E)], may be negative
    double rate_per_pulse = 0.0;          // max(raw, 0)
    double rate_bits_per_s_raw = 0.0;     // raw per-pulse rate x rep rate
    double rate_bits_per_s = 0.0;         // floored per-pulse rate x rep rate
    bool secure = false;                  // raw > 0
};

/// H2(x) = -x log2 x - (1-x) log2(1-x), continuous at 0 and 1 by limit.
inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("binary_entropy: x must be in [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// Overall gain Q: probability of a coincidence per pulse.
inline double overall_gain(const LinkParams& p) {
    p.validate();
    const double pa = p.eta_a * p.mu / 2.0;
    const double pb = p.eta_b * p.mu / 2.0;
    const double pc = pa + pb - p.eta_a * p.eta_b * p.mu / 2.0;
    const double ta = (1.0 - p.y0a) / ((1.0 + pa) * (1.0 + pa));
    const double tb = (1.0 - p.y0b) / ((1.0 + pb) * (1.0 + pb));
    const double tc = (1.0 - p.y0a) * (1.0 - p.y0b) / ((1.0 + pc) * (1.0 + pc));
    return 1.0 - ta - tb + tc;
}

/// Overall QBER E of the coincidences counted by overall_gain.
inline double overall_qber(const LinkParams& p) {
    const double gain = overall_gain(p);
    if (gain <= 0.0) throw std::domain_error("overall_qber: zero gain");
    const double pa = p.eta_a * p.mu / 2.0;
    const double pb = p.eta_b * p.mu / 2.0;
    const double pc = pa + pb - p.eta_a * p.eta_b * p.mu / 2.0;
    const double corr = (p.e0 - p.ed) * p.eta_a * p.eta_b * p.mu * (1.0 + p.mu / 2.0) /
                        (gain * (1.0 + pa) * (1.0 + pb) * (1.0 + pc));
    return p.e0 - corr;
}

/// Asymptotic secret key rate R = q Q [1 - f(E) H2(E) - H2(E)] per pulse.
inline KeyRateResult secret_key_rate(const LinkParams& p) {
    KeyRateResult out{};
    out.gain = overall_gain(p);
    if (out.gain > 0.0) {
        out.qber = overall_qber(p);
        const double h2 = binary_entropy(out.qber);
        out.rate_per_pulse_raw = p.q * out.gain * (1.0 - p.f_ec * h2 - h2);
    } else {
        out.gain = 0.0;
        out.qber = p.e0;
        out.rate_per_pulse_raw = 0.0;
    }
    out.rate_per_pulse = out.rate_per_pulse_raw > 0.0 ? out.rate_per_pulse_raw : 0.0;
    out.rate_bits_per_s_raw = out.rate_per_pulse_raw * p.rep_rate_hz;
    out.rate_bits_per_s = out.rate_per_pulse * p.rep_rate_hz;
    out.secure = out.rate_per_pulse_raw > 0.0;
    return out;
}

/// Hybrid-link sweep configuration: base link parameters plus the channel
/// models that produce eta_a, eta_b and Y0B per grid cell.
struct SweepConfig {
    LinkParams base;
    channel::FiberChannel fiber;          // length_km overridden per cell
    channel::FreeSpaceChannel space;      // path_length_m overridden per cell
    channel::BackgroundParams background;
};

struct SweepCell {
    double fiber_km;
    double space_km;
    KeyRateResult result;
};

/// Row-major evaluation over (fiber length, free-space length). Each cell:
/// eta_a = eta0_a * eta_fiber, eta_b = eta0_b * eta_space, Y0B from the solar
/// background model. Cells are independent.
inline std::vector<SweepCell> sweep_hybrid(const std::vector<double>& fiber_km_grid,
                                           const std::vector<double>& space_km_grid,
                                           const SweepConfig& cfg) {
    if (fiber_km_grid.empty() || space_km_grid.empty())
        throw std::invalid_argument("sweep_hybrid: grids must be non-empty");
    const double y0b = channel::solar_background_yield(cfg.background).y0b;
    std::vector<SweepCell> cells;
    cells.reserve(fiber_km_grid.size() * space_km_grid.size());
    for (double lf : fiber_km_grid) {
        channel::FiberChannel fib = cfg.fiber;
        fib.length_km = lf;
        const double eta_fiber = channel::fiber_transmissivity(fib);
        for (double ls : space_km_grid) {
            channel::FreeSpaceChannel sp = cfg.space;
            sp.path_length_m = ls * 1000.0;
            LinkParams p = cfg.base;
            p.eta_a = p.eta0_a * eta_fiber;
            p.eta_b = p.eta0_b * channel::free_space_transmissivity(sp);
            p.y0b = y0b;
            cells.push_back({lf, ls, secret_key_rate(p)});
        }
    }
    return cells;
}

/// Uniform grid start, start+step, ..., up to stop (inclusive within 1e-9
/// of a step).
inline std::vector<double> uniform_grid(double start, double stop, double step) {
    if (step <= 0.0 || stop < start) throw std::invalid_argument("uniform_grid: bad range");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = start + static_cast<double>(i) * step;
    return g;
}

}  // namespace qkd::keyrate
