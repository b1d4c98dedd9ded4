// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qkd/rng.hpp"

namespace qkd::source {

/// Pair-generation side of the link: mean pair number, pulse clock, pump
/// calibration and the wavelength bookkeeping of the SPDC process.
struct SourceParams {
    double mu = 0.03;                  // mean photon pairs per pulse
    double rep_rate_hz = 1.0e8;        // pulse repetition rate
    double pump_power_mw = 10.0;       // SPDC pump power
    double visibility = 0.958;         // two-photon interference visibility
    double phase_rad = std::numbers::pi;
    double pump_wavelength_nm = 1064.0;
    double signal_wavelength_nm = 1555.0;
    double idler_wavelength_nm = 3370.0;

    void validate() const {
        if (mu < 0.0) throw std::invalid_argument("source.mu must be >= 0");
        if (rep_rate_hz <= 0.0) throw std::invalid_argument("source.rep_rate_hz must be > 0");
        if (pump_power_mw < 0.0) throw std::invalid_argument("source.pump_power_mw must be >= 0");
        if (!(visibility >= 0.0 && visibility <= 1.0))
            throw std::invalid_argument("source.visibility must be in [0,1]");
        const double lhs = 1.0 / pump_wavelength_nm;
        const double rhs = 1.0 / signal_wavelength_nm + 1.0 / idler_wavelength_nm;
        if (std::abs(lhs - rhs) > 1e-3 * lhs)
            throw std::invalid_argument(
                "source wavelengths violate energy conservation (1/lp = 1/ls + 1/li) by >0.1%");
    }
};

/// Truncated Poisson photon-pair-number distribution. Truncation point is the
/// smallest n with CDF > 1 - 1e-12.
class PairCountDistribution {
  public:
    explicit PairCountDistribution(double mu) : mu_(mu) {
        if (mu < 0.0 || !std::isfinite(mu))
            throw std::invalid_argument("pair_count_distribution: mu must be finite and >= 0");
        double p = std::exp(-mu);  // P(0)
        double cdf = p;
        pmf_.push_back(p);
        std::size_t n = 0;
        while (cdf <= 1.0 - 1e-12) {
            ++n;
            p *= mu / static_cast<double>(n);
            pmf_.push_back(p);
            cdf += p;
        }
    }

    double mu() const noexcept { return mu_; }
    /// P(N = n); zero beyond the truncation point.
    double pmf(std::size_t n) const noexcept { return n < pmf_.size() ? pmf_[n] : 0.0; }
    std::size_t truncation() const noexcept { return pmf_.size() - 1; }
    const std::vector<double>& probabilities() const noexcept { return pmf_; }

    std::uint64_t sample(rng::Stream& stream) const { return stream.poisson(mu_); }

  private:
    double mu_;
    std::vector<double> pmf_;
};

inline PairCountDistribution pair_count_distribution(double mu) {
    return PairCountDistribution(mu);
}

/// Linear pump calibration anchored at mu = 0.03 for a 10 mW pump.
inline double mu_from_pump(double pump_mw, double mu_per_mw = 0.003) {
    if (pump_mw < 0.0) throw std::invalid_argument("mu_from_pump: pump power must be >= 0");
    return mu_per_mw * pump_mw;
}

enum class ConversionDirection {
    spdc,          // 1/lp = 1/ls + 1/li, solve for the unknown daughter
    upconversion,  // 1/lout = 1/lin + 1/lp
};

/// Energy-conservation partner wavelength for SPDC or sum-frequency
/// upconversion, in nm.
inline double conjugate_wavelength(double lambda_pump_nm, double lambda_known_nm,
                                   ConversionDirection dir = ConversionDirection::spdc) {
    if (lambda_pump_nm <= 0.0 || lambda_known_nm <= 0.0)
        throw std::invalid_argument("conjugate_wavelength: wavelengths must be > 0");
    if (dir == ConversionDirection::spdc) {
        if (lambda_known_nm <= lambda_pump_nm)
            throw std::invalid_argument(
                "conjugate_wavelength: SPDC daughter wavelength must exceed the pump");
        return 1.0 / (1.0 / lambda_pump_nm - 1.0 / lambda_known_nm);
    }
    return 1.0 / (1.0 / lambda_known_nm + 1.0 / lambda_pump_nm);
}

/// Quantum conversion efficiency of the upconversion stage vs pump power:
/// eta(P) = eta_max sin^2((pi/2) sqrt(P / P_sat)), clamped past P_sat.
/// Defaults pass through the 50%-at-1.5-W operating point and predict 0.19
/// at 0.5 W. Functional form after Dam, Tidemand-Lichtenberg, Pedersen,
/// Nat. Photonics 6, 788 (2012).
inline double upconversion_qce(double fuc_pump_w, double eta_max = 1.0, double p_sat_w = 6.0) {
    if (p_sat_w <= 0.0) throw std::invalid_argument("upconversion_qce: p_sat must be > 0");
    if (fuc_pump_w < 0.0) throw std::invalid_argument("upconversion_qce: pump power must be >= 0");
    if (fuc_pump_w >= p_sat_w) return eta_max;
    const double s = std::sin(0.5 * std::numbers::pi * std::sqrt(fuc_pump_w / p_sat_w));
    return eta_max * s * s;
}

/// Additive background yield per pulse caused by pump-induced parasitic
/// nonlinear processes in the upconversion stage, linear in pump power.
inline double fuc_noise_yield(double fuc_pump_w, double yield_per_watt) {
    if (fuc_pump_w < 0.0 || yield_per_watt < 0.0)
        throw std::invalid_argument("fuc_noise_yield: inputs must be >= 0");
    return yield_per_watt * fuc_pump_w;
}

struct BrightnessInputs {
    double ncc_per_s = 496.0;   // coincidence rate
    double alpha_s = 0.23;      // signal collection efficiency
    double alpha_i = 0.0476;    // idler collection efficiency
    double eta_s = 0.2;         // signal detection efficiency
    double eta_i = 0.08;        // idler detection efficiency
    double pump_mw = 10.0;
    double dnu_mhz = 1.91e6;    // full generated bandwidth
    double dnu_s_mhz = 6.4e5;   // filtered signal bandwidth
    double dnu_i_mhz = 1.2e5;   // filtered idler bandwidth

    void validate() const {
        auto eff = [](double x) { return x > 0.0 && x <= 1.0; };
        if (!eff(alpha_s) || !eff(alpha_i) || !eff(eta_s) || !eff(eta_i))
            throw std::invalid_argument("brightness: efficiencies must be in (0,1]");
        if (dnu_mhz <= 0.0 || dnu_s_mhz <= 0.0 || dnu_i_mhz <= 0.0)
            throw std::invalid_argument("brightness: bandwidths must be > 0");
    }
};

enum class BrightnessMode { inferred, detected };

/// Spectral brightness in (s mW MHz)^-1.
/// inferred: Ncc / (alpha_s alpha_i eta_s eta_i P dnu)
/// detected: Ncc / (P sqrt(dnu_s dnu_i))
inline double spectral_brightness(const BrightnessInputs& in, BrightnessMode mode) {
    in.validate();
    if (mode == BrightnessMode::inferred) {
        const double den = in.alpha_s * in.alpha_i * in.eta_s * in.eta_i * in.pump_mw * in.dnu_mhz;
        if (den == 0.0) throw std::invalid_argument("spectral_brightness: zero denominator");
        return in.ncc_per_s / den;
    }
    const double den = in.pump_mw * std::sqrt(in.dnu_s_mhz * in.dnu_i_mhz);
    if (den == 0.0) throw std::invalid_argument("spectral_brightness: zero denominator");
    return in.ncc_per_s / den;
}

/// Small-mu coincidence-to-accidental ratio:
/// CAR = mu etaA etaB / ((mu etaA + Y0A)(mu etaB + Y0B)).
/// Infinite when the accidental product vanishes.
inline double car_analytic(double mu, double eta_a, double eta_b, double y0a, double y0b) {
    if (mu < 0.0 || eta_a < 0.0 || eta_b < 0.0 || y0a < 0.0 || y0b < 0.0)
        throw std::invalid_argument("car_analytic: inputs must be >= 0");
    const double acc = (mu * eta_a + y0a) * (mu * eta_b + y0b);
    if (acc == 0.0) return std::numeric_limits<double>::infinity();
    return mu * eta_a * eta_b / acc;
}

}  // namespace qkd::source
