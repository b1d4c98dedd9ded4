// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: analytic key rates, hybrid-channel sweeps, pulse
// Monte Carlo, CHSH counting, state tomography, crystal phase compensation
// and link-budget breakdowns, driven by a JSON configuration.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "qkd/cli.hpp"

namespace {

struct GridOverride {
    bool has_fiber = false, has_space = false;
    qkd::config::GridSpec fiber, space;
};

// --grid fiber=<start:stop:step>,space=<start:stop:step>  (either axis optional)
GridOverride parse_grid(const std::string& text) {
    GridOverride g;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        const std::string part = text.substr(pos, next - pos);
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos) throw qkd::config::ConfigError("--grid: expected axis=range");
        const std::string axis = part.substr(0, eq);
        const std::string range = part.substr(eq + 1);
        qkd::config::GridSpec spec;
        if (std::sscanf(range.c_str(), "%lf:%lf:%lf", &spec.start, &spec.stop, &spec.step) != 3)
            throw qkd::config::ConfigError("--grid: expected start:stop:step, got " + range);
        if (axis == "fiber") {
            g.fiber = spec;
            g.has_fiber = true;
        } else if (axis == "space") {
            g.space = spec;
            g.has_space = true;
        } else {
            throw qkd::config::ConfigError("--grid: unknown axis \"" + axis + "\"");
        }
        pos = next + 1;
    }
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BBM92 entanglement QKD link toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string grid_text;
    std::string geometry;
    std::uint64_t seed = 0;
    bool has_seed = false;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_path, "output path (stdout when absent)");
    auto* seed_opt = app.add_option("--seed", seed, "random seed override");
    app.add_option("--grid", grid_text, "sweep grids, fiber=<start:stop:step>,space=<...> (km)");
    app.add_option("--geometry", geometry, "free-space path geometry: vertical|horizontal")
        ->check(CLI::IsMember({"vertical", "horizontal"}));

    const std::pair<const char*, const char*> subs[] = {
        {"keyrate", "analytic gain, QBER and secret key rate for the configured link"},
        {"sweep", "key-rate grid over fiber and free-space lengths (CSV)"},
        {"simulate", "pulse-level Monte Carlo of the protocol run"},
        {"chsh", "four-setting CHSH counting experiment with error propagation"},
        {"tomo", "synthetic 16-projection tomography with ML reconstruction"},
        {"compensate", "crystal phase map (CSV) and compensation-scan optimum (<out>.json)"},
        {"linkbudget", "transmissivity and background-yield breakdown"},
    };
    for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qkd::cli::kExitUsage;
    }
    has_seed = seed_opt->count() > 0;

    try {
        qkd::config::RunConfig cfg =
            config_path.empty() ? qkd::config::RunConfig{} : qkd::config::load_config(config_path);
        if (has_seed) {
            cfg.sim.seed = seed;
            cfg.tomo_seed = seed;
        }
        if (!grid_text.empty()) {
            const GridOverride g = parse_grid(grid_text);
            if (g.has_fiber) cfg.sweep_fiber_km = g.fiber;
            if (g.has_space) cfg.sweep_space_km = g.space;
        }
        if (!geometry.empty())
            cfg.space.geometry = geometry == "vertical" ? qkd::channel::PathGeometry::vertical
                                                        : qkd::channel::PathGeometry::horizontal;
        cfg.validate();
        const std::string sub = app.get_subcommands().front()->get_name();
        const std::optional<std::string> out =
            out_path.empty() ? std::nullopt : std::optional<std::string>(out_path);
        return qkd::cli::dispatch(sub, cfg, out);
    } catch (const qkd::config::ConfigError& e) {
        std::cerr << qkd::config::json{{"error", {{"kind", "config"}, {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return qkd::cli::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << qkd::config::json{{"error", {{"kind", "runtime"}, {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return qkd::cli::kExitRuntime;
    }
}
