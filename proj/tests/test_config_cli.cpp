// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <string>

#include "qkd/cli.hpp"
#include "qkd/config.hpp"

using namespace qkd;
using Catch::Approx;
using config::json;

TEST_CASE("empty document loads full defaults", "[config]") {
    const auto cfg = config::from_json(json::parse("{}"));
    CHECK(cfg.source.mu == Approx(0.03));
    CHECK(cfg.source.rep_rate_hz == Approx(1.0e8));
    CHECK(cfg.link.eta0_a == Approx(0.042));
    CHECK(cfg.link.eta0_b == Approx(0.0023));
    CHECK(cfg.link.y0a == Approx(3.0e-5));
    CHECK(cfg.link.ed == Approx(0.015));
    CHECK(cfg.link.f_ec == Approx(1.16));
    CHECK(cfg.link.q == Approx(0.5));
    CHECK(cfg.fiber.loss_db_per_km == Approx(0.18));
    CHECK(cfg.space.extinction_sea_level_per_m == Approx(8.1e-5));
    CHECK(cfg.space.scale_height_m == Approx(6600.0));
    CHECK(cfg.background.excess_noise == Approx(2.0e-5));
}

TEST_CASE("validation errors carry the field path", "[config]") {
    try {
        config::from_json(json::parse(R"({"source":{"mu":-1.0}})"));
        FAIL("expected ConfigError");
    } catch (const config::ConfigError& e) {
        CHECK(std::string(e.what()).find("source.mu") != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected", "[config]") {
    CHECK_THROWS_AS(config::from_json(json::parse(R"({"sourc":{}})")), config::ConfigError);
    try {
        config::from_json(json::parse(R"({"source":{"muu":0.01}})"));
        FAIL("expected ConfigError");
    } catch (const config::ConfigError& e) {
        CHECK(std::string(e.what()).find("source.muu") != std::string::npos);
    }
    CHECK_THROWS_AS(config::from_json(json::parse(R"({"defaults":"tableX"})")),
                    config::ConfigError);
}

TEST_CASE("emit then reload round-trips", "[config]") {
    config::RunConfig cfg;
    cfg.source.mu = 0.05;
    cfg.fiber.length_km = 42.0;
    cfg.space.geometry = channel::PathGeometry::horizontal;
    cfg.sim.double_click_policy = sim::DoubleClickPolicy::discard;
    cfg.compensator.orientation = comp::CompensatorOrientation::signal_v_extraordinary;
    cfg.sim.n_pulses = 123456;
    const auto first = config::to_json(cfg);
    const auto reloaded = config::from_json(first);
    CHECK(config::to_json(reloaded).dump() == first.dump());
}

TEST_CASE("enum parsing", "[config]") {
    auto cfg = config::from_json(json::parse(R"({"space":{"geometry":"horizontal"}})"));
    CHECK(cfg.space.geometry == channel::PathGeometry::horizontal);
    CHECK_THROWS_AS(config::from_json(json::parse(R"({"space":{"geometry":"diagonal"}})")),
                    config::ConfigError);
    CHECK_THROWS_AS(
        config::from_json(json::parse(R"({"sim":{"double_click_policy":"keep"}})")),
        config::ConfigError);
    cfg = config::from_json(json::parse(R"({"compensation":{"spdc_model":"mgo-cln-gayer-2008"}})"));
    CHECK(cfg.spdc_phase.model->id == "mgo-cln-gayer-2008");
}

TEST_CASE("visibility syncs from source unless overridden", "[config]") {
    auto cfg = config::from_json(json::parse(R"({"source":{"visibility":0.9}})"));
    CHECK(cfg.sim.state_visibility == Approx(0.9));
    cfg = config::from_json(
        json::parse(R"({"source":{"visibility":0.9},"sim":{"state_visibility":0.8}})"));
    CHECK(cfg.sim.state_visibility == Approx(0.8));
}

TEST_CASE("resolved link folds the channels in", "[config]") {
    config::RunConfig cfg;
    cfg.fiber.length_km = 96.0;
    cfg.space.path_length_m = 5.0e5;
    const auto lk = cfg.resolved_link();
    CHECK(lk.eta_a == Approx(0.042 * channel::fiber_transmissivity(cfg.fiber)).margin(1e-15));
    CHECK(lk.eta_b ==
          Approx(0.0023 * channel::free_space_transmissivity(cfg.space)).margin(1e-15));
    CHECK(lk.y0b == Approx(channel::solar_background_yield(cfg.background).y0b).margin(1e-18));
    CHECK(lk.mu == cfg.source.mu);
}

TEST_CASE("keyrate output delegates to the library", "[config]") {
    config::RunConfig cfg;  // zero channel lengths
    const auto j = cli::run_keyrate(cfg);
    const auto direct = keyrate::secret_key_rate(cfg.resolved_link());
    CHECK(j.at("Q").get<double>() == direct.gain);
    CHECK(j.at("E").get<double>() == direct.qber);
    CHECK(j.at("R_per_pulse").get<double>() == direct.rate_per_pulse_raw);
    CHECK(j.at("R_bits_per_s").get<double>() == direct.rate_bits_per_s_raw);
}

TEST_CASE("sweep csv shape and formatting", "[config]") {
    config::RunConfig cfg;
    cfg.sweep_fiber_km = {0.0, 10.0, 10.0};
    cfg.sweep_space_km = {0.0, 500.0, 500.0};
    const std::string csv = cli::run_sweep_csv(cfg);
    CHECK(csv.rfind("fiber_km,space_km,Q,E,R_per_pulse,R_bits_per_s\n", 0) == 0);
    std::size_t rows = 0;
    for (char c : csv)
        if (c == '\n') ++rows;
    CHECK(rows == 5);  // header + 2x2 grid, row-major
    // 9 significant digits in fixed scientific notation.
    CHECK(csv.find("0.00000000e+00,0.00000000e+00,") != std::string::npos);
    const auto second_row = csv.find("\n0.00000000e+00,5.00000000e+02");
    CHECK(second_row != std::string::npos);
}

TEST_CASE("scientific formatting is stable", "[config]") {
    CHECK(cli::format_sci(0.0) == "0.00000000e+00");
    CHECK(cli::format_sci(1.0) == "1.00000000e+00");
    CHECK(cli::format_sci(-0.018706821403658) == "-1.87068214e-02");
    CHECK(cli::format_sci(2.85e17) == "2.85000000e+17");
}
