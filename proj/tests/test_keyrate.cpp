// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>

#include "qkd/keyrate.hpp"
#include "qkd/rng.hpp"

using namespace qkd;
using Catch::Approx;

namespace {

keyrate::LinkParams table1_lab() {
    keyrate::LinkParams p;  // defaults are the lab point with unit channels
    p.eta_a = p.eta0_a;
    p.eta_b = p.eta0_b;
    return p;
}

/// Bisection root of 1 - (f+1) H2(E) on (lo, hi); independent of the header's
/// secret-key code path.
double positivity_root(double f_ec, double lo = 1e-6, double hi = 0.49) {
    auto g = [f_ec](double e) { return 1.0 - (f_ec + 1.0) * keyrate::binary_entropy(e); };
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("binary entropy", "[keyrate]") {
    CHECK(keyrate::binary_entropy(0.5) == 1.0);
    CHECK(keyrate::binary_entropy(0.0) == 0.0);
    CHECK(keyrate::binary_entropy(1.0) == 0.0);
    const double x = 0.11;
    CHECK(keyrate::binary_entropy(x) ==
          Approx(-x * std::log2(x) - (1 - x) * std::log2(1 - x)).margin(1e-15));
    CHECK(keyrate::binary_entropy(0.11) == Approx(0.49992).margin(5e-6));
    CHECK_THROWS_AS(keyrate::binary_entropy(-0.01), std::invalid_argument);
    CHECK_THROWS_AS(keyrate::binary_entropy(1.01), std::invalid_argument);
}

TEST_CASE("overall gain limits and reference value", "[keyrate]") {
    keyrate::LinkParams p = table1_lab();
    p.mu = 0.0;
    p.y0a = 3e-4;
    p.y0b = 7e-5;
    CHECK(keyrate::overall_gain(p) == Approx(p.y0a * p.y0b).epsilon(1e-7));

    keyrate::LinkParams ideal = table1_lab();
    ideal.mu = 0.2;
    ideal.eta_a = ideal.eta_b = 1.0;
    ideal.y0a = ideal.y0b = 0.0;
    const double denom = 1.0 + ideal.mu / 2.0;
    CHECK(keyrate::overall_gain(ideal) == Approx(1.0 - 1.0 / (denom * denom)).margin(1e-12));

    keyrate::LinkParams ref = table1_lab();
    ref.mu = 0.03;
    ref.eta_a = ref.eta_b = 0.1;
    ref.y0a = ref.y0b = 0.0;
    const double q_ref = keyrate::overall_gain(ref);
    CHECK(q_ref == Approx(3.108021817e-4).epsilon(1e-9));  // high-precision evaluation
    CHECK(q_ref == Approx(ref.mu * ref.eta_a * ref.eta_b).epsilon(0.05));  // small-mu check
}

TEST_CASE("overall qber limits and reference value", "[keyrate]") {
    keyrate::LinkParams p = table1_lab();
    p.eta_a = p.eta_b = 0.0;
    p.y0a = p.y0b = 1e-4;
    CHECK(keyrate::overall_qber(p) == Approx(p.e0).margin(1e-12));

    keyrate::LinkParams same = table1_lab();
    same.ed = same.e0 = 0.37;
    same.y0a = same.y0b = 1e-5;
    CHECK(keyrate::overall_qber(same) == Approx(0.37).margin(1e-12));

    keyrate::LinkParams ref = table1_lab();
    ref.mu = 0.03;
    ref.eta_a = ref.eta_b = 0.1;
    ref.y0a = ref.y0b = 0.0;
    ref.e0 = 0.5;
    ref.ed = 0.015;
    CHECK(keyrate::overall_qber(ref) == Approx(0.027603043703).epsilon(1e-9));

    keyrate::LinkParams dead = table1_lab();
    dead.mu = 0.0;
    dead.eta_a = dead.eta_b = 0.0;
    dead.y0a = dead.y0b = 0.0;
    CHECK_THROWS_AS(keyrate::overall_qber(dead), std::domain_error);
}

TEST_CASE("secret key rate structure", "[keyrate]") {
    // E -> 0 limit: in the single-pair regime with no backgrounds and no
    // detector error the rate collapses to q Q. (At finite mu the model
    // keeps a multi-pair error floor of about e0 mu even when ed = 0; below
    // mu ~ 1e-7 the four-term gain expression runs out of double precision.)
    keyrate::LinkParams clean = table1_lab();
    clean.ed = 0.0;
    clean.y0a = clean.y0b = 0.0;
    clean.mu = 1e-5;
    const auto res = keyrate::secret_key_rate(clean);
    CHECK(res.qber < 2e-5);
    CHECK(res.rate_per_pulse_raw == Approx(clean.q * res.gain).epsilon(1e-3));
    CHECK(res.secure);
    CHECK(res.rate_bits_per_s_raw == Approx(res.rate_per_pulse_raw * clean.rep_rate_hz));

    keyrate::LinkParams lab = table1_lab();
    lab.ed = 0.0;
    lab.y0a = lab.y0b = 0.0;
    const double floor_qber = keyrate::overall_qber(lab);
    CHECK(floor_qber == Approx(0.5 * lab.mu).epsilon(0.1));  // multi-pair error floor

    // Secure-rate arithmetic at the published operating point: a 153 bit/s
    // sifted rate at 4.4% error and f = 1.16 leaves about 67 bits/s.
    const double h2 = keyrate::binary_entropy(0.044);
    const double secure = 153.0 * (1.0 - 1.16 * h2 - h2);
    CHECK(secure == Approx(66.96).margin(0.01));
    CHECK(std::abs(secure - 65.0) / 65.0 < 0.10);
}

TEST_CASE("positivity cutoffs from the bisection oracle", "[keyrate]") {
    CHECK(positivity_root(1.16) == Approx(0.098).margin(1e-3));
    CHECK(positivity_root(1.16) == Approx(0.0981060).margin(1e-5));
    CHECK(positivity_root(1.0) == Approx(0.110).margin(1e-3));
    CHECK(positivity_root(1.0) == Approx(0.1100279).margin(1e-5));
}

TEST_CASE("gain and qber stay in range over random parameters", "[keyrate]") {
    rng::Stream st(314159, 0);
    for (int i = 0; i < 10'000; ++i) {
        keyrate::LinkParams p;
        p.mu = st.uniform() * 0.5;
        p.eta_a = st.uniform();
        p.eta_b = st.uniform();
        p.y0a = st.uniform() * 1e-2;
        p.y0b = st.uniform() * 1e-2;
        p.ed = st.uniform() * 0.2;
        const double q = keyrate::overall_gain(p);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
        if (q > 0.0) {
            const double e = keyrate::overall_qber(p);
            CHECK(e >= 0.0);
            CHECK(e <= 0.5 + 1e-12);
            const auto r = keyrate::secret_key_rate(p);
            CHECK(std::isfinite(r.rate_per_pulse_raw));
        }
    }
}

TEST_CASE("qber approaches e0 as the signal vanishes", "[keyrate]") {
    keyrate::LinkParams p = table1_lab();
    p.y0a = p.y0b = 1e-4;
    double prev = 0.0;
    for (double scale : {1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001}) {
        p.eta_a = 0.1 * scale;
        p.eta_b = 0.1 * scale;
        const double e = keyrate::overall_qber(p);
        CHECK(e > prev);  // monotone toward e0
        prev = e;
    }
    CHECK(prev < p.e0);
    p.eta_a = p.eta_b = 1e-9;
    CHECK(keyrate::overall_qber(p) == Approx(p.e0).margin(1e-4));
}

TEST_CASE("reference operating point reproduces the measured rates", "[keyrate]") {
    keyrate::LinkParams p = table1_lab();
    p.y0b = 2e-5;
    const auto res = keyrate::secret_key_rate(p);
    const double raw_rate = res.gain * p.rep_rate_hz;
    const double sifted_rate = p.q * res.gain * p.rep_rate_hz;
    CHECK(raw_rate == Approx(306.3).epsilon(0.03));
    CHECK(sifted_rate == Approx(153.0).epsilon(0.03));
}

TEST_CASE("hybrid sweep consistency", "[keyrate]") {
    keyrate::SweepConfig cfg;
    cfg.base = table1_lab();
    cfg.background.detector_eff = 1e-4;

    // Single cell equals a direct call with the same resolved parameters.
    const auto cells = keyrate::sweep_hybrid({20.0}, {300.0}, cfg);
    REQUIRE(cells.size() == 1);
    channel::FiberChannel fib = cfg.fiber;
    fib.length_km = 20.0;
    channel::FreeSpaceChannel sp = cfg.space;
    sp.path_length_m = 3.0e5;
    keyrate::LinkParams direct = cfg.base;
    direct.eta_a = direct.eta0_a * channel::fiber_transmissivity(fib);
    direct.eta_b = direct.eta0_b * channel::free_space_transmissivity(sp);
    direct.y0b = channel::solar_background_yield(cfg.background).y0b;
    const auto want = keyrate::secret_key_rate(direct);
    CHECK(cells[0].result.gain == want.gain);
    CHECK(cells[0].result.qber == want.qber);
    CHECK(cells[0].result.rate_per_pulse_raw == want.rate_per_pulse_raw);

    // The floored rate is nonincreasing along both axes (the raw rate climbs
    // back toward zero once the link is insecure).
    const auto fiber_grid = keyrate::uniform_grid(0.0, 120.0, 15.0);
    const auto space_grid = keyrate::uniform_grid(0.0, 900.0, 150.0);
    const auto grid = keyrate::sweep_hybrid(fiber_grid, space_grid, cfg);
    const std::size_t cols = space_grid.size();
    for (std::size_t i = 0; i < fiber_grid.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double r = grid[i * cols + j].result.rate_per_pulse;
            if (i > 0) CHECK(r <= grid[(i - 1) * cols + j].result.rate_per_pulse + 1e-15);
            if (j > 0) CHECK(r <= grid[i * cols + j - 1].result.rate_per_pulse + 1e-15);
        }
    }

    CHECK_THROWS_AS(keyrate::sweep_hybrid({}, {1.0}, cfg), std::invalid_argument);
}

TEST_CASE("uniform grid", "[keyrate]") {
    const auto g = keyrate::uniform_grid(0.0, 150.0, 1.5);
    REQUIRE(g.size() == 101);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == Approx(150.0).margin(1e-9));
    CHECK_THROWS_AS(keyrate::uniform_grid(10.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("parameter validation", "[keyrate]") {
    keyrate::LinkParams p;
    p.f_ec = 0.9;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = keyrate::LinkParams{};
    p.q = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = keyrate::LinkParams{};
    p.eta_a = 1.2;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
