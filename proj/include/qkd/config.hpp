// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qkd/channel.hpp"
#include "qkd/compensation.hpp"
#include "qkd/keyrate.hpp"
#include "qkd/protocol_sim.hpp"

namespace qkd::config {

using json = nlohmann::ordered_json;

/// Raised for malformed or invalid configuration input. The CLI maps it to
/// exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;
};

struct ScanSpec {
    comp::FreeParameter parameter = comp::FreeParameter::temperature;
    double lo = 20.0;
    double hi = 250.0;
    double step = 0.5;
};

/// Full run configuration. Field defaults are the built-in `table1`
/// reference parameter set of the modeled link.
struct RunConfig {
    source::SourceParams source;
    keyrate::LinkParams link;  // eta_a/eta_b computed from channels at dispatch
    channel::FiberChannel fiber;
    channel::FreeSpaceChannel space;
    channel::BackgroundParams background;
    sim::SimConfig sim;
    // Default matches the statistics of a ~60 s run at the 100 MHz clock.
    std::uint64_t chsh_counts_per_setting = 4'000;
    double tomo_n_per_setting = 10'000.0;
    std::uint64_t tomo_seed = 1;
    comp::SpdcPhaseParams spdc_phase;
    comp::CompensatorSpec compensator;
    std::string compensator_model_id = "mgo-cln-gayer-2008";
    comp::SpectralBand band;
    ScanSpec scan;
    GridSpec sweep_fiber_km{0.0, 150.0, 1.5};
    GridSpec sweep_space_km{0.0, 1000.0, 10.0};

    void validate() const;
    /// Overall link parameters with the channel models folded in.
    keyrate::LinkParams resolved_link() const;
};

namespace detail {

inline std::string geometry_name(channel::PathGeometry g) {
    return g == channel::PathGeometry::vertical ? "vertical" : "horizontal";
}
inline channel::PathGeometry geometry_from(const std::string& s, const std::string& path) {
    if (s == "vertical") return channel::PathGeometry::vertical;
    if (s == "horizontal") return channel::PathGeometry::horizontal;
    throw ConfigError(path + ": expected \"vertical\" or \"horizontal\"");
}
inline std::string policy_name(sim::DoubleClickPolicy p) {
    return p == sim::DoubleClickPolicy::random ? "random" : "discard";
}
inline sim::DoubleClickPolicy policy_from(const std::string& s, const std::string& path) {
    if (s == "random") return sim::DoubleClickPolicy::random;
    if (s == "discard") return sim::DoubleClickPolicy::discard;
    throw ConfigError(path + ": expected \"random\" or \"discard\"");
}
inline std::string orientation_name(comp::CompensatorOrientation o) {
    return o == comp::CompensatorOrientation::signal_v_ordinary ? "signal_v_ordinary"
                                                                : "signal_v_extraordinary";
}
inline comp::CompensatorOrientation orientation_from(const std::string& s,
                                                     const std::string& path) {
    if (s == "signal_v_ordinary") return comp::CompensatorOrientation::signal_v_ordinary;
    if (s == "signal_v_extraordinary") return comp::CompensatorOrientation::signal_v_extraordinary;
    throw ConfigError(path + ": expected \"signal_v_ordinary\" or \"signal_v_extraordinary\"");
}
inline std::string scan_param_name(comp::FreeParameter p) {
    return p == comp::FreeParameter::temperature ? "temperature" : "tilt_angle";
}
inline comp::FreeParameter scan_param_from(const std::string& s, const std::string& path) {
    if (s == "temperature") return comp::FreeParameter::temperature;
    if (s == "tilt_angle") return comp::FreeParameter::tilt_angle;
    throw ConfigError(path + ": expected \"temperature\" or \"tilt_angle\"");
}

}  // namespace detail

/// Serializes the full configuration; also defines the schema against which
/// unknown keys are rejected.
inline json to_json(const RunConfig& c) {
    json j;
    j["defaults"] = "table1";
    j["source"] = {{"mu", c.source.mu},
                   {"rep_rate_hz", c.source.rep_rate_hz},
                   {"pump_power_mw", c.source.pump_power_mw},
                   {"visibility", c.source.visibility},
                   {"phase_rad", c.source.phase_rad},
                   {"pump_wavelength_nm", c.source.pump_wavelength_nm},
                   {"signal_wavelength_nm", c.source.signal_wavelength_nm},
                   {"idler_wavelength_nm", c.source.idler_wavelength_nm}};
    j["link"] = {{"eta0_a", c.link.eta0_a}, {"eta0_b", c.link.eta0_b}, {"y0a", c.link.y0a},
                 {"e0", c.link.e0},         {"ed", c.link.ed},         {"f_ec", c.link.f_ec},
                 {"q", c.link.q}};
    j["fiber"] = {{"loss_db_per_km", c.fiber.loss_db_per_km}, {"length_km", c.fiber.length_km}};
    j["space"] = {{"receiver_radius_m", c.space.receiver_radius_m},
                  {"beam_waist_m", c.space.beam_waist_m},
                  {"path_length_m", c.space.path_length_m},
                  {"altitude_m", c.space.altitude_m},
                  {"wavelength_nm", c.space.wavelength_nm},
                  {"extinction_sea_level_per_m", c.space.extinction_sea_level_per_m},
                  {"scale_height_m", c.space.scale_height_m},
                  {"geometry", detail::geometry_name(c.space.geometry)}};
    j["background"] = {{"kappa", c.background.kappa},
                       {"solar_irradiance", c.background.solar_irradiance},
                       {"filter_bandwidth_nm", c.background.filter_bandwidth_nm},
                       {"time_window_s", c.background.time_window_s},
                       {"fov_sr", c.background.fov_sr},
                       {"receiver_radius_m", c.background.receiver_radius_m},
                       {"detector_eff", c.background.detector_eff},
                       {"excess_noise", c.background.excess_noise}};
    j["sim"] = {{"seed", c.sim.seed},
                {"n_pulses", c.sim.n_pulses},
                {"state_visibility", c.sim.state_visibility},
                {"visibility_z", c.sim.visibility_z},
                {"visibility_x", c.sim.visibility_x},
                {"coincidence_window_s", c.sim.coincidence_window_s},
                {"double_click_policy", detail::policy_name(c.sim.double_click_policy)},
                {"alice_z_deg", c.sim.alice_bases.z_deg},
                {"alice_x_deg", c.sim.alice_bases.x_deg},
                {"bob_z_deg", c.sim.bob_bases.z_deg},
                {"bob_x_deg", c.sim.bob_bases.x_deg}};
    j["chsh"] = {{"angles_deg",
                  {c.sim.chsh_angles.a.angle_deg, c.sim.chsh_angles.a_prime.angle_deg,
                   c.sim.chsh_angles.b.angle_deg, c.sim.chsh_angles.b_prime.angle_deg}},
                 {"counts_per_setting", c.chsh_counts_per_setting}};
    j["tomo"] = {{"n_per_setting", c.tomo_n_per_setting}, {"seed", c.tomo_seed}};
    j["compensation"] = {{"lambda_p_nm", c.spdc_phase.lambda_p_nm},
                         {"spdc_length_mm", c.spdc_phase.crystal_length_mm},
                         {"spdc_temp_c", c.spdc_phase.temp_c},
                         {"spdc_model", c.spdc_phase.model->id},
                         {"length_mm", c.compensator.length_mm},
                         {"cut_angle_deg", c.compensator.cut_angle_deg},
                         {"temperature_c", c.compensator.temperature_c},
                         {"orientation", detail::orientation_name(c.compensator.orientation)},
                         {"model", c.compensator_model_id},
                         {"band_lo_nm", c.band.lambda_lo_nm},
                         {"band_hi_nm", c.band.lambda_hi_nm},
                         {"band_points", c.band.points},
                         {"scan",
                          {{"parameter", detail::scan_param_name(c.scan.parameter)},
                           {"lo", c.scan.lo},
                           {"hi", c.scan.hi},
                           {"step", c.scan.step}}}};
    j["sweep"] = {{"fiber_km",
                   {{"start", c.sweep_fiber_km.start},
                    {"stop", c.sweep_fiber_km.stop},
                    {"step", c.sweep_fiber_km.step}}},
                  {"space_km",
                   {{"start", c.sweep_space_km.start},
                    {"stop", c.sweep_space_km.stop},
                    {"step", c.sweep_space_km.step}}}};
    return j;
}

namespace detail {

/// Rejects keys not present in the schema tree (recursive).
inline void reject_unknown_keys(const json& input, const json& schema, const std::string& path) {
    if (!input.is_object()) return;
    if (!schema.is_object()) throw ConfigError(path + ": unexpected object");
    for (const auto& [key, value] : input.items()) {
        const std::string sub = path.empty() ? key : path + "." + key;
        if (!schema.contains(key)) throw ConfigError("unknown config key: " + sub);
        reject_unknown_keys(value, schema.at(key), sub);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + "." + key + ": wrong type");
    }
}

}  // namespace detail

/// Applies a parsed JSON document on top of the defaults. Unknown keys are
/// rejected; module invariants are revalidated.
inline RunConfig from_json(const json& j) {
    RunConfig c{};
    detail::reject_unknown_keys(j, to_json(c), "");
    if (j.contains("defaults")) {
        const auto name = j.at("defaults").get<std::string>();
        if (name != "table1") throw ConfigError("defaults: unknown preset \"" + name + "\"");
    }
    using detail::read;
    if (j.contains("source")) {
        const auto& s = j.at("source");
        read(s, "mu", c.source.mu, "source");
        read(s, "rep_rate_hz", c.source.rep_rate_hz, "source");
        read(s, "pump_power_mw", c.source.pump_power_mw, "source");
        read(s, "visibility", c.source.visibility, "source");
        read(s, "phase_rad", c.source.phase_rad, "source");
        read(s, "pump_wavelength_nm", c.source.pump_wavelength_nm, "source");
        read(s, "signal_wavelength_nm", c.source.signal_wavelength_nm, "source");
        read(s, "idler_wavelength_nm", c.source.idler_wavelength_nm, "source");
        // state_visibility tracks the source unless set explicitly below.
        c.sim.state_visibility = c.source.visibility;
    }
    if (j.contains("link")) {
        const auto& s = j.at("link");
        read(s, "eta0_a", c.link.eta0_a, "link");
        read(s, "eta0_b", c.link.eta0_b, "link");
        read(s, "y0a", c.link.y0a, "link");
        read(s, "e0", c.link.e0, "link");
        read(s, "ed", c.link.ed, "link");
        read(s, "f_ec", c.link.f_ec, "link");
        read(s, "q", c.link.q, "link");
    }
    if (j.contains("fiber")) {
        const auto& s = j.at("fiber");
        read(s, "loss_db_per_km", c.fiber.loss_db_per_km, "fiber");
        read(s, "length_km", c.fiber.length_km, "fiber");
    }
    if (j.contains("space")) {
        const auto& s = j.at("space");
        read(s, "receiver_radius_m", c.space.receiver_radius_m, "space");
        read(s, "beam_waist_m", c.space.beam_waist_m, "space");
        read(s, "path_length_m", c.space.path_length_m, "space");
        read(s, "altitude_m", c.space.altitude_m, "space");
        read(s, "wavelength_nm", c.space.wavelength_nm, "space");
        read(s, "extinction_sea_level_per_m", c.space.extinction_sea_level_per_m, "space");
        read(s, "scale_height_m", c.space.scale_height_m, "space");
        if (s.contains("geometry"))
            c.space.geometry =
                detail::geometry_from(s.at("geometry").get<std::string>(), "space.geometry");
    }
    if (j.contains("background")) {
        const auto& s = j.at("background");
        read(s, "kappa", c.background.kappa, "background");
        read(s, "solar_irradiance", c.background.solar_irradiance, "background");
        read(s, "filter_bandwidth_nm", c.background.filter_bandwidth_nm, "background");
        read(s, "time_window_s", c.background.time_window_s, "background");
        read(s, "fov_sr", c.background.fov_sr, "background");
        read(s, "receiver_radius_m", c.background.receiver_radius_m, "background");
        read(s, "detector_eff", c.background.detector_eff, "background");
        read(s, "excess_noise", c.background.excess_noise, "background");
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        read(s, "seed", c.sim.seed, "sim");
        read(s, "n_pulses", c.sim.n_pulses, "sim");
        read(s, "state_visibility", c.sim.state_visibility, "sim");
        read(s, "visibility_z", c.sim.visibility_z, "sim");
        read(s, "visibility_x", c.sim.visibility_x, "sim");
        read(s, "coincidence_window_s", c.sim.coincidence_window_s, "sim");
        if (s.contains("double_click_policy"))
            c.sim.double_click_policy = detail::policy_from(
                s.at("double_click_policy").get<std::string>(), "sim.double_click_policy");
        read(s, "alice_z_deg", c.sim.alice_bases.z_deg, "sim");
        read(s, "alice_x_deg", c.sim.alice_bases.x_deg, "sim");
        read(s, "bob_z_deg", c.sim.bob_bases.z_deg, "sim");
        read(s, "bob_x_deg", c.sim.bob_bases.x_deg, "sim");
    }
    if (j.contains("chsh")) {
        const auto& s = j.at("chsh");
        if (s.contains("angles_deg")) {
            const auto& a = s.at("angles_deg");
            if (!a.is_array() || a.size() != 4)
                throw ConfigError("chsh.angles_deg: expected 4 angles");
            c.sim.chsh_angles.a = state::AnalyzerSetting(a[0].get<double>());
            c.sim.chsh_angles.a_prime = state::AnalyzerSetting(a[1].get<double>());
            c.sim.chsh_angles.b = state::AnalyzerSetting(a[2].get<double>());
            c.sim.chsh_angles.b_prime = state::AnalyzerSetting(a[3].get<double>());
        }
        read(s, "counts_per_setting", c.chsh_counts_per_setting, "chsh");
    }
    if (j.contains("tomo")) {
        const auto& s = j.at("tomo");
        read(s, "n_per_setting", c.tomo_n_per_setting, "tomo");
        read(s, "seed", c.tomo_seed, "tomo");
    }
    if (j.contains("compensation")) {
        const auto& s = j.at("compensation");
        read(s, "lambda_p_nm", c.spdc_phase.lambda_p_nm, "compensation");
        read(s, "spdc_length_mm", c.spdc_phase.crystal_length_mm, "compensation");
        read(s, "spdc_temp_c", c.spdc_phase.temp_c, "compensation");
        if (s.contains("spdc_model"))
            c.spdc_phase.model = &comp::index_model_by_id(s.at("spdc_model").get<std::string>());
        read(s, "length_mm", c.compensator.length_mm, "compensation");
        read(s, "cut_angle_deg", c.compensator.cut_angle_deg, "compensation");
        read(s, "temperature_c", c.compensator.temperature_c, "compensation");
        if (s.contains("orientation"))
            c.compensator.orientation = detail::orientation_from(
                s.at("orientation").get<std::string>(), "compensation.orientation");
        read(s, "model", c.compensator_model_id, "compensation");
        read(s, "band_lo_nm", c.band.lambda_lo_nm, "compensation");
        read(s, "band_hi_nm", c.band.lambda_hi_nm, "compensation");
        read(s, "band_points", c.band.points, "compensation");
        if (s.contains("scan")) {
            const auto& sc = s.at("scan");
            if (sc.contains("parameter"))
                c.scan.parameter = detail::scan_param_from(sc.at("parameter").get<std::string>(),
                                                           "compensation.scan.parameter");
            read(sc, "lo", c.scan.lo, "compensation.scan");
            read(sc, "hi", c.scan.hi, "compensation.scan");
            read(sc, "step", c.scan.step, "compensation.scan");
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        auto read_grid = [](const json& g, GridSpec& out, const std::string& path) {
            detail::read(g, "start", out.start, path);
            detail::read(g, "stop", out.stop, path);
            detail::read(g, "step", out.step, path);
        };
        if (s.contains("fiber_km")) read_grid(s.at("fiber_km"), c.sweep_fiber_km, "sweep.fiber_km");
        if (s.contains("space_km")) read_grid(s.at("space_km"), c.sweep_space_km, "sweep.space_km");
    }
    c.validate();
    return c;
}

inline void RunConfig::validate() const {
    try {
        source.validate();
        fiber.validate();
        space.validate();
        background.validate();
        band.validate();
        compensator.validate();
        comp::index_model_by_id(compensator_model_id);
        keyrate::LinkParams lk = link;
        lk.mu = source.mu;
        lk.rep_rate_hz = source.rep_rate_hz;
        lk.validate();
        sim::SimConfig s = sim;
        s.source = source;
        s.link = lk;
        s.validate();
        if (!(scan.hi > scan.lo) || scan.step <= 0.0)
            throw std::invalid_argument("compensation.scan: need hi > lo, step > 0");
        if (sweep_fiber_km.step <= 0.0 || sweep_fiber_km.stop < sweep_fiber_km.start)
            throw std::invalid_argument("sweep.fiber_km: bad range");
        if (sweep_space_km.step <= 0.0 || sweep_space_km.stop < sweep_space_km.start)
            throw std::invalid_argument("sweep.space_km: bad range");
        if (chsh_counts_per_setting == 0)
            throw std::invalid_argument("chsh.counts_per_setting must be > 0");
        if (tomo_n_per_setting <= 0.0)
            throw std::invalid_argument("tomo.n_per_setting must be > 0");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

inline keyrate::LinkParams RunConfig::resolved_link() const {
    keyrate::LinkParams lk = link;
    lk.mu = source.mu;
    lk.rep_rate_hz = source.rep_rate_hz;
    lk.eta_a = lk.eta0_a * channel::fiber_transmissivity(fiber);
    lk.eta_b = lk.eta0_b * channel::free_space_transmissivity(space);
    lk.y0b = channel::solar_background_yield(background).y0b;
    return lk;
}

/// Loads and validates a configuration file; empty or absent sections fall
/// back to the table1 preset values.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) text = "{}";
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
}

}  // namespace qkd::config
