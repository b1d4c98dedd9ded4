// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "qkd/entangled_source.hpp"
#include "qkd/keyrate.hpp"
#include "qkd/quantum_state.hpp"
#include "qkd/rng.hpp"

namespace qkd::sim {

enum class DoubleClickPolicy {
    random,   // squash double clicks to a uniformly random bit
    discard,  // drop the event from the sifted key
};

/// Measurement bases of one party: outcome-0 analyzer angles for the Z and X
/// bases; outcome 1 is the orthogonal direction.
struct BasisAngles {
    double z_deg = 0.0;
    double x_deg = 45.0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t n_pulses = 10'000'000;
    source::SourceParams source;
    keyrate::LinkParams link;
    double state_visibility = 0.958;
    // Optional per-basis visibilities (matched-basis contrast may differ
    // between the rectilinear and diagonal bases); negative means "use
    // state_visibility".
    double visibility_z = -1.0;
    double visibility_x = -1.0;
    double coincidence_window_s = 3.2e-9;
    BasisAngles alice_bases;
    BasisAngles bob_bases;
    state::ChshAngles chsh_angles;
    DoubleClickPolicy double_click_policy = DoubleClickPolicy::random;

    double basis_visibility(int basis) const noexcept {
        const double v = basis == 0 ? visibility_z : visibility_x;
        return v >= 0.0 ? v : state_visibility;
    }

    void validate() const {
        if (n_pulses == 0) throw std::invalid_argument("sim.n_pulses must be > 0");
        if (coincidence_window_s <= 0.0)
            throw std::invalid_argument("sim.coincidence_window_s must be > 0");
        if (!(state_visibility >= 0.0 && state_visibility <= 1.0))
            throw std::invalid_argument("sim.state_visibility must be in [0,1]");
        for (double v : {visibility_z, visibility_x})
            if (v > 1.0)
                throw std::invalid_argument("sim per-basis visibility must be <= 1");
        source.validate();
        link.validate();
        // Coincidences are pulse-slotted, which requires the window to fit
        // inside one pulse period.
        if (coincidence_window_s >= 1.0 / source.rep_rate_hz)
            throw std::invalid_argument(
                "sim.coincidence_window_s must be smaller than the pulse period");
    }
};

/// One estimated ratio with its binomial standard error.
struct RatioEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::uint64_t trials = 0;
};

struct SimReport {
    std::uint64_t n_pulses = 0;
    std::uint64_t coincidences = 0;   // same-slot coincidences (any bases)
    std::uint64_t sifted = 0;         // matched-basis coincidences kept for key
    std::uint64_t errors = 0;         // bit disagreements in the sifted key
    double raw_rate_bits_per_s = 0.0;
    double sifted_rate_bits_per_s = 0.0;
    double secure_rate_bits_per_s = 0.0;  // rate model applied to (Q^, E^)
    double gain_estimate = 0.0;           // Q^
    RatioEstimate qber_total;
    RatioEstimate qber_z;
    RatioEstimate qber_x;
    double car = std::numeric_limits<double>::infinity();
    double car_stderr = 0.0;
    std::uint64_t car_accidentals = 0;
};

namespace detail {

/// Joint outcome probabilities P(i,j) for outcome bins i,j in {0,1} at one
/// analyzer-angle pair, as a categorical table.
inline std::array<double, 4> joint_table(const state::DensityMatrix& rho, double angle_a_deg,
                                         double angle_b_deg) {
    std::array<double, 4> t{};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const state::AnalyzerSetting a(angle_a_deg + 90.0 * i);
            const state::AnalyzerSetting b(angle_b_deg + 90.0 * j);
            t[2 * i + j] = state::coincidence_probability(rho, a, b);
        }
    }
    return t;
}

struct ClickSet {
    bool bin[2] = {false, false};
    bool any() const noexcept { return bin[0] || bin[1]; }
    bool double_click() const noexcept { return bin[0] && bin[1]; }
    int sole_bit() const noexcept { return bin[1] ? 1 : 0; }
};

/// Outcome of one pulse at both parties under fixed analyzer angles.
struct PulseOutcome {
    ClickSet alice;
    ClickSet bob;
};

/// Generates all clicks of one pulse: pair emission, lossy detection with
/// state-correlated outcomes, and background clicks into random bins.
inline PulseOutcome run_pulse(rng::Stream& st, std::uint64_t n_pairs, double eta_a, double eta_b,
                              double y0a, double y0b, const std::array<double, 4>& joint) {
    PulseOutcome out{};
    const double pa0 = joint[0] + joint[1];  // Alice marginal for bin 0
    const double pb0 = joint[0] + joint[2];  // Bob marginal for bin 0
    for (std::uint64_t i = 0; i < n_pairs; ++i) {
        const bool det_a = st.bernoulli(eta_a);
        const bool det_b = st.bernoulli(eta_b);
        if (det_a && det_b) {
            const int o = st.categorical4(joint);
            out.alice.bin[o >> 1] = true;
            out.bob.bin[o & 1] = true;
        } else if (det_a) {
            out.alice.bin[st.bernoulli(pa0) ? 0 : 1] = true;
        } else if (det_b) {
            out.bob.bin[st.bernoulli(pb0) ? 0 : 1] = true;
        }
    }
    if (y0a > 0.0 && st.bernoulli(y0a)) out.alice.bin[st.bit()] = true;
    if (y0b > 0.0 && st.bernoulli(y0b)) out.bob.bin[st.bit()] = true;
    return out;
}

}  // namespace detail

/// Pulse-level Monte Carlo of the BBM92 run. Deterministic for a fixed
/// (seed, config); per-pulse randomness comes from counter-based streams, so
/// the report is independent of any batching of the pulse loop.
inline SimReport simulate_run(const SimConfig& cfg) {
    cfg.validate();
    const auto& lk = cfg.link;
    const double mu = cfg.source.mu;

    // Joint outcome tables for the four basis combinations, indexed
    // [alice_basis][bob_basis] with 0 = Z, 1 = X. Matched-basis tables use
    // the per-basis visibility; mixed-basis outcomes are uniform for any V.
    const double a_ang[2] = {cfg.alice_bases.z_deg, cfg.alice_bases.x_deg};
    const double b_ang[2] = {cfg.bob_bases.z_deg, cfg.bob_bases.x_deg};
    std::array<std::array<double, 4>, 4> tables;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double v = i == j ? cfg.basis_visibility(i) : cfg.state_visibility;
            const state::DensityMatrix rho =
                state::werner_mix(v, state::bell_state(cfg.source.phase_rad));
            tables[2 * i + j] = detail::joint_table(rho, a_ang[i], b_ang[j]);
        }
    }
    // Sifting convention: Bob flips his bit in a matched basis whose ideal
    // outcomes are anti-correlated (the X basis of a Phi- state with the
    // default D/D analyzer pairing).
    bool flip_bob[2];
    for (int i = 0; i < 2; ++i) {
        const auto& t = tables[2 * i + i];
        flip_bob[i] = (t[0] + t[3]) < (t[1] + t[2]);
    }

    SimReport rep{};
    rep.n_pulses = cfg.n_pulses;
    bool prev_alice_clicked = false;

    for (std::uint64_t k = 0; k < cfg.n_pulses; ++k) {
        rng::Stream st(cfg.seed, k);
        const std::uint64_t n_pairs = st.poisson(mu);
        // Fast path: nothing can click this pulse.
        if (n_pairs == 0 && !(lk.y0a > 0.0) && !(lk.y0b > 0.0)) {
            prev_alice_clicked = false;
            continue;
        }
        const int basis_a = st.bit();
        const int basis_b = st.bit();
        const auto out = detail::run_pulse(st, n_pairs, lk.eta_a, lk.eta_b, lk.y0a, lk.y0b,
                                           tables[2 * basis_a + basis_b]);
        const bool a_clicked = out.alice.any();
        const bool b_clicked = out.bob.any();
        if (prev_alice_clicked && b_clicked) ++rep.car_accidentals;
        prev_alice_clicked = a_clicked;
        if (!(a_clicked && b_clicked)) continue;
        ++rep.coincidences;
        if (basis_a != basis_b) continue;

        int bit_a, bit_b;
        if (out.alice.double_click() || out.bob.double_click()) {
            if (cfg.double_click_policy == DoubleClickPolicy::discard) continue;
            bit_a = out.alice.double_click() ? st.bit() : out.alice.sole_bit();
            bit_b = out.bob.double_click() ? st.bit() : out.bob.sole_bit();
        } else {
            bit_a = out.alice.sole_bit();
            bit_b = out.bob.sole_bit();
        }
        if (flip_bob[basis_a]) bit_b ^= 1;
        // Intrinsic detector error as a symmetric flip on Bob's sifted bit.
        if (lk.ed > 0.0 && st.bernoulli(lk.ed)) bit_b ^= 1;

        ++rep.sifted;
        const bool error = bit_a != bit_b;
        if (error) ++rep.errors;
        auto& basis_tally = (basis_a == 0) ? rep.qber_z : rep.qber_x;
        ++basis_tally.trials;
        if (error) basis_tally.value += 1.0;  // numerator; normalized below
    }

    auto finalize_ratio = [](RatioEstimate& r) {
        if (r.trials == 0) {
            r.value = 0.0;
            r.stderr_ = 0.0;
            return;
        }
        const double n = static_cast<double>(r.trials);
        r.value /= n;
        r.stderr_ = std::sqrt(std::max(r.value * (1.0 - r.value), 0.0) / n);
    };
    finalize_ratio(rep.qber_z);
    finalize_ratio(rep.qber_x);
    rep.qber_total.trials = rep.sifted;
    rep.qber_total.value = static_cast<double>(rep.errors);
    finalize_ratio(rep.qber_total);

    const double n = static_cast<double>(cfg.n_pulses);
    rep.gain_estimate = static_cast<double>(rep.coincidences) / n;
    rep.raw_rate_bits_per_s = rep.gain_estimate * lk.rep_rate_hz;
    rep.sifted_rate_bits_per_s = static_cast<double>(rep.sifted) / n * lk.rep_rate_hz;

    // Rate model applied to the estimated gain and QBER:
    // R = q Qhat [1 - f(E) H2(Ehat) - H2(Ehat)].
    const double h2 = keyrate::binary_entropy(std::min(rep.qber_total.value, 1.0));
    rep.secure_rate_bits_per_s =
        lk.q * rep.gain_estimate * (1.0 - lk.f_ec * h2 - h2) * lk.rep_rate_hz;

    if (rep.car_accidentals > 0) {
        rep.car = static_cast<double>(rep.coincidences) / static_cast<double>(rep.car_accidentals);
        if (rep.coincidences > 0)
            rep.car_stderr = rep.car * std::sqrt(1.0 / static_cast<double>(rep.coincidences) +
                                                 1.0 / static_cast<double>(rep.car_accidentals));
    }
    return rep;
}

/// 16 coincidence counts of a CHSH run: 4 analyzer settings x 4 outcome
/// pairs. Index: 4*setting + 2*alice_outcome + bob_outcome.
struct CountsRecord {
    std::array<std::uint64_t, 16> c{};

    std::uint64_t setting_total(int s) const noexcept {
        return c[4 * s] + c[4 * s + 1] + c[4 * s + 2] + c[4 * s + 3];
    }
};

struct ChshResult {
    double s_value = 0.0;
    double sigma_s = 0.0;
    std::array<double, 4> correlations{};
    CountsRecord counts;
};

/// Correlation estimators and S from a counts record.
/// E_m = (C++ + C-- - C+- - C-+)/N_m;  S = E_0 - E_1 + E_2 + E_3 with the
/// settings ordered (a,b), (a,b'), (a',b), (a',b').
inline double chsh_from_counts(const CountsRecord& rec, std::array<double, 4>* corr_out = nullptr) {
    static constexpr double kOutcomeSign[4] = {+1.0, -1.0, -1.0, +1.0};
    static constexpr double kSettingSign[4] = {+1.0, -1.0, +1.0, +1.0};
    double s = 0.0;
    for (int m = 0; m < 4; ++m) {
        const auto total = rec.setting_total(m);
        if (total == 0) throw std::invalid_argument("chsh_from_counts: empty setting pair");
        double e = 0.0;
        for (int o = 0; o < 4; ++o) e += kOutcomeSign[o] * static_cast<double>(rec.c[4 * m + o]);
        e /= static_cast<double>(total);
        if (corr_out) (*corr_out)[m] = e;
        s += kSettingSign[m] * e;
    }
    return s;
}

/// Poisson error propagation through the correlation estimators:
/// sigma_S^2 = sum_j (sqrt(C_j) dS/dC_j)^2 with
/// dS/dC_j = g_m (s_j - E_m)/N_m for count j in setting m.
inline double sigma_of_S(const CountsRecord& rec) {
    static constexpr double kOutcomeSign[4] = {+1.0, -1.0, -1.0, +1.0};
    std::array<double, 4> corr{};
    chsh_from_counts(rec, &corr);
    double var = 0.0;
    for (int m = 0; m < 4; ++m) {
        const double n = static_cast<double>(rec.setting_total(m));
        for (int o = 0; o < 4; ++o) {
            const double partial = (kOutcomeSign[o] - corr[m]) / n;  // |g_m| = 1
            var += static_cast<double>(rec.c[4 * m + o]) * partial * partial;
        }
    }
    return std::sqrt(var);
}

/// Runs the 4-setting counting experiment until each setting pair has
/// accumulated `counts_target_per_setting` coincidences.
inline ChshResult chsh_experiment(const SimConfig& cfg, std::uint64_t counts_target_per_setting) {
    cfg.validate();
    if (counts_target_per_setting == 0)
        throw std::invalid_argument("chsh_experiment: counts target must be > 0");
    const auto& lk = cfg.link;
    const double mu = cfg.source.mu;
    const state::DensityMatrix rho =
        state::werner_mix(cfg.state_visibility, state::bell_state(cfg.source.phase_rad));
    const auto& ang = cfg.chsh_angles;
    const std::array<std::pair<double, double>, 4> settings{{
        {ang.a.angle_deg, ang.b.angle_deg},
        {ang.a.angle_deg, ang.b_prime.angle_deg},
        {ang.a_prime.angle_deg, ang.b.angle_deg},
        {ang.a_prime.angle_deg, ang.b_prime.angle_deg},
    }};

    const double p_coinc = keyrate::overall_gain(lk);
    if (p_coinc <= 0.0)
        throw std::invalid_argument("chsh_experiment: zero coincidence probability");
    const auto pulse_budget = static_cast<std::uint64_t>(
        50.0 * static_cast<double>(counts_target_per_setting) / p_coinc + 1.0e6);

    ChshResult res{};
    for (int m = 0; m < 4; ++m) {
        const auto joint = detail::joint_table(rho, settings[m].first, settings[m].second);
        std::uint64_t got = 0;
        // Distinct stream family per setting, derived from the seed.
        const std::uint64_t setting_seed = rng::mix64(cfg.seed ^ (0x5e77196e5a9c3abcULL + m));
        for (std::uint64_t k = 0; got < counts_target_per_setting; ++k) {
            if (k > pulse_budget)
                throw std::runtime_error("chsh_experiment: coincidence target unreachable");
            rng::Stream st(setting_seed, k);
            const std::uint64_t n_pairs = st.poisson(mu);
            if (n_pairs == 0 && !(lk.y0a > 0.0) && !(lk.y0b > 0.0)) continue;
            const auto out =
                detail::run_pulse(st, n_pairs, lk.eta_a, lk.eta_b, lk.y0a, lk.y0b, joint);
            if (!(out.alice.any() && out.bob.any())) continue;
            const int bit_a = out.alice.double_click() ? st.bit() : out.alice.sole_bit();
            const int bit_b = out.bob.double_click() ? st.bit() : out.bob.sole_bit();
            ++res.counts.c[4 * m + 2 * bit_a + bit_b];
            ++got;
        }
    }
    res.s_value = chsh_from_counts(res.counts, &res.correlations);
    res.sigma_s = sigma_of_S(res.counts);
    return res;
}

struct CarResult {
    double car = std::numeric_limits<double>::infinity();
    double stderr_ = 0.0;
    std::uint64_t true_coincidences = 0;
    std::uint64_t accidental_coincidences = 0;
};

/// Coincidence-to-accidental ratio from a Monte Carlo run: same-slot
/// coincidences vs a one-pulse-shifted window (Alice at pulse k, Bob at
/// pulse k+1).
inline CarResult car_measurement(const SimConfig& cfg) {
    const SimReport rep = simulate_run(cfg);
    CarResult out{};
    out.true_coincidences = rep.coincidences;
    out.accidental_coincidences = rep.car_accidentals;
    out.car = rep.car;
    out.stderr_ = rep.car_stderr;
    return out;
}

}  // namespace qkd::sim
