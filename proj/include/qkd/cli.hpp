// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qkd/config.hpp"
#include "qkd/tomography.hpp"

namespace qkd::cli {

using config::json;
using config::RunConfig;

/// Exit codes: 0 success, 1 runtime/numerical failure, 2 usage/config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Fixed scientific notation with 9 significant digits; stable across
/// platforms and runs.
inline std::string format_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.8e", v);
    return buf;
}

namespace detail {

inline void write_text(const std::optional<std::string>& out_path, const std::string& text) {
    if (!out_path) {
        std::cout << text;
        return;
    }
    std::ofstream out(*out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output path: " + *out_path);
    out << text;
}

inline std::vector<double> grid_values(const config::GridSpec& g) {
    return keyrate::uniform_grid(g.start, g.stop, g.step);
}

}  // namespace detail

inline json run_keyrate(const RunConfig& cfg) {
    const auto lk = cfg.resolved_link();
    const auto res = keyrate::secret_key_rate(lk);
    json j;
    j["Q"] = res.gain;
    j["E"] = res.qber;
    j["R_per_pulse"] = res.rate_per_pulse_raw;
    j["R_bits_per_s"] = res.rate_bits_per_s_raw;
    return j;
}

inline std::string run_sweep_csv(const RunConfig& cfg) {
    keyrate::SweepConfig sc;
    sc.base = cfg.link;
    sc.base.mu = cfg.source.mu;
    sc.base.rep_rate_hz = cfg.source.rep_rate_hz;
    sc.fiber = cfg.fiber;
    sc.space = cfg.space;
    sc.background = cfg.background;
    const auto cells = keyrate::sweep_hybrid(detail::grid_values(cfg.sweep_fiber_km),
                                             detail::grid_values(cfg.sweep_space_km), sc);
    std::string out = "fiber_km,space_km,Q,E,R_per_pulse,R_bits_per_s\n";
    for (const auto& c : cells) {
        out += format_sci(c.fiber_km) + ',' + format_sci(c.space_km) + ',' +
               format_sci(c.result.gain) + ',' + format_sci(c.result.qber) + ',' +
               format_sci(c.result.rate_per_pulse) + ',' + format_sci(c.result.rate_bits_per_s) +
               '\n';
    }
    return out;
}

inline json run_simulate(const RunConfig& cfg) {
    sim::SimConfig sc = cfg.sim;
    sc.source = cfg.source;
    sc.link = cfg.resolved_link();
    const auto rep = sim::simulate_run(sc);
    json j;
    j["seed"] = sc.seed;
    j["n_pulses"] = rep.n_pulses;
    j["coincidences"] = rep.coincidences;
    j["sifted"] = rep.sifted;
    j["errors"] = rep.errors;
    j["raw_rate_bits_per_s"] = rep.raw_rate_bits_per_s;
    j["sifted_rate_bits_per_s"] = rep.sifted_rate_bits_per_s;
    j["secure_rate_bits_per_s"] = rep.secure_rate_bits_per_s;
    j["gain_estimate"] = rep.gain_estimate;
    auto ratio = [](const sim::RatioEstimate& r) {
        return json{{"value", r.value}, {"stderr", r.stderr_}, {"trials", r.trials}};
    };
    j["qber_total"] = ratio(rep.qber_total);
    j["qber_z"] = ratio(rep.qber_z);
    j["qber_x"] = ratio(rep.qber_x);
    j["car"] = std::isfinite(rep.car) ? json(rep.car) : json("inf");
    j["car_stderr"] = rep.car_stderr;
    j["car_accidentals"] = rep.car_accidentals;
    return j;
}

inline json run_chsh(const RunConfig& cfg) {
    sim::SimConfig sc = cfg.sim;
    sc.source = cfg.source;
    sc.link = cfg.resolved_link();
    const auto res = sim::chsh_experiment(sc, cfg.chsh_counts_per_setting);
    json j;
    j["S"] = res.s_value;
    j["sigma_S"] = res.sigma_s;
    j["correlations"] = res.correlations;
    j["counts"] = res.counts.c;
    return j;
}

inline json run_tomo(const RunConfig& cfg) {
    const auto settings = tomo::standard_projection_set();
    const auto rho = state::werner_mix(cfg.sim.state_visibility,
                                       state::bell_state(cfg.source.phase_rad));
    const auto counts = tomo::simulate_tomo_counts(rho, cfg.tomo_n_per_setting, cfg.tomo_seed,
                                                   settings);
    const auto res = tomo::mle_reconstruct(counts, settings);
    if (!res.converged)
        throw std::runtime_error("tomo: maximum-likelihood reconstruction did not converge");
    json j;
    json re = json::array(), im = json::array();
    for (int r = 0; r < 4; ++r) {
        json re_row = json::array(), im_row = json::array();
        for (int col = 0; col < 4; ++col) {
            re_row.push_back(res.rho_hat.matrix()(r, col).real());
            im_row.push_back(res.rho_hat.matrix()(r, col).imag());
        }
        re.push_back(re_row);
        im.push_back(im_row);
    }
    j["rho_re"] = re;
    j["rho_im"] = im;
    j["fidelity"] = res.fidelity_vs_target;
    j["log_likelihood"] = res.log_likelihood;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    return j;
}

inline json run_linkbudget(const RunConfig& cfg) {
    const double eta_fiber = channel::fiber_transmissivity(cfg.fiber);
    const double wz = channel::beam_radius_at_receiver(cfg.space.beam_waist_m,
                                                       cfg.space.path_length_m,
                                                       cfg.space.wavelength_nm);
    const double eta_d = channel::diffraction_transmissivity(cfg.space.receiver_radius_m, wz);
    const double eta_atm = channel::atmospheric_transmissivity(cfg.space);
    const auto bg = channel::solar_background_yield(cfg.background);
    json j;
    j["eta_fiber"] = eta_fiber;
    j["w_z_m"] = wz;
    j["eta_diffraction"] = eta_d;
    j["eta_atmosphere"] = eta_atm;
    j["eta_space"] = eta_d * eta_atm;
    j["eta_a"] = cfg.link.eta0_a * eta_fiber;
    j["eta_b"] = cfg.link.eta0_b * eta_d * eta_atm;
    j["gamma_r"] = bg.gamma_r;
    j["n_background"] = bg.n_b;
    j["y0b"] = bg.y0b;
    j["y0a"] = cfg.link.y0a;
    return j;
}

struct CompensateOutput {
    std::string csv;
    json optimum;
};

inline CompensateOutput run_compensate(const RunConfig& cfg) {
    const auto& model = comp::index_model_by_id(cfg.compensator_model_id);
    const auto rows = comp::phase_map(cfg.spdc_phase, cfg.compensator, model, cfg.band);
    std::string csv = "lambda_s_nm,delta_phi_rad,delta_phi_compensated_rad\n";
    for (const auto& r : rows)
        csv += format_sci(r.lambda_s_nm) + ',' + format_sci(r.delta_phi_rad) + ',' +
               format_sci(r.delta_phi_compensated_rad) + '\n';

    const comp::ScanRange range{cfg.scan.lo, cfg.scan.hi, cfg.scan.step};
    const auto opt = comp::optimize_compensation(cfg.scan.parameter, range, cfg.band,
                                                 cfg.compensator, cfg.spdc_phase, model);
    json j;
    j["parameter"] = config::detail::scan_param_name(cfg.scan.parameter);
    j["optimal_value"] = opt.optimal_value;
    j["flatness_before_rad"] = opt.flatness_before;
    j["flatness_after_rad"] = opt.flatness_after;
    return {csv, j};
}

/// Runs one subcommand against a validated configuration, writing artifacts
/// to `out_path` (stdout when absent). `compensate` writes its CSV to the
/// output path and the optimum JSON next to it at "<out>.json".
inline int dispatch(const std::string& subcommand, const RunConfig& cfg,
                    const std::optional<std::string>& out_path) {
    try {
        if (subcommand == "keyrate") {
            detail::write_text(out_path, run_keyrate(cfg).dump(2) + "\n");
        } else if (subcommand == "sweep") {
            detail::write_text(out_path, run_sweep_csv(cfg));
        } else if (subcommand == "simulate") {
            detail::write_text(out_path, run_simulate(cfg).dump(2) + "\n");
        } else if (subcommand == "chsh") {
            detail::write_text(out_path, run_chsh(cfg).dump(2) + "\n");
        } else if (subcommand == "tomo") {
            detail::write_text(out_path, run_tomo(cfg).dump(2) + "\n");
        } else if (subcommand == "compensate") {
            const auto out = run_compensate(cfg);
            detail::write_text(out_path, out.csv);
            const std::string json_text = out.optimum.dump(2) + "\n";
            if (out_path)
                detail::write_text(*out_path + ".json", json_text);
            else
                std::cout << json_text;
        } else if (subcommand == "linkbudget") {
            detail::write_text(out_path, run_linkbudget(cfg).dump(2) + "\n");
        } else {
            std::cerr << "unknown subcommand: " << subcommand << "\n";
            return kExitUsage;
        }
    } catch (const config::ConfigError& e) {
        std::cerr << json{{"error", {{"kind", "config"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << json{{"error", {{"kind", "config"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"kind", "runtime"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace qkd::cli
