// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "qkd/quantum_state.hpp"
#include "qkd/rng.hpp"

using namespace qkd;
using state::AnalyzerSetting;
using state::DensityMatrix;
using state::Mat4;
using state::TwoQubitState;
using state::Vec4;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

/// Closed form for a Werner mixture of Phi-: P(a, b) = (1 + V cos 2(a+b))/4.
double werner_coincidence_oracle(double v, double a_deg, double b_deg) {
    return (1.0 + v * std::cos(2.0 * (a_deg + b_deg) * kPi / 180.0)) / 4.0;
}

DensityMatrix product_state(double alice_deg, double bob_deg) {
    const double a = alice_deg * kPi / 180.0, b = bob_deg * kPi / 180.0;
    Vec4 amps;
    amps << std::cos(a) * std::cos(b), std::cos(a) * std::sin(b), std::sin(a) * std::cos(b),
        std::sin(a) * std::sin(b);
    return DensityMatrix::pure(TwoQubitState(amps));
}

}  // namespace

TEST_CASE("bell_state amplitudes", "[quantum_state]") {
    const auto phi_minus = state::bell_state(kPi);
    const Vec4& a = phi_minus.amplitudes();
    CHECK(a(0).real() == Approx(1.0 / std::numbers::sqrt2).margin(1e-12));
    CHECK(std::abs(a(1)) == Approx(0.0).margin(1e-15));
    CHECK(std::abs(a(2)) == Approx(0.0).margin(1e-15));
    CHECK(a(3).real() == Approx(-1.0 / std::numbers::sqrt2).margin(1e-12));
    CHECK(std::abs(a(3).imag()) < 1e-12);

    const auto phi_plus = state::bell_state(0.0);
    CHECK(phi_plus.amplitudes()(3).real() == Approx(+1.0 / std::numbers::sqrt2).margin(1e-12));

    for (double phase : {-2.5, -0.3, 0.7, 1.9, 3.0, 6.1}) {
        CHECK(state::bell_state(phase).amplitudes().squaredNorm() == Approx(1.0).margin(1e-12));
    }
    CHECK_THROWS_AS(state::bell_state(std::nan("")), std::invalid_argument);
}

TEST_CASE("analyzer angle normalization", "[quantum_state]") {
    CHECK(AnalyzerSetting(135.0).angle_deg == Approx(-45.0));
    CHECK(AnalyzerSetting(90.0).angle_deg == Approx(-90.0));
    CHECK(AnalyzerSetting(-90.0).angle_deg == Approx(-90.0));
    CHECK(AnalyzerSetting(270.0).angle_deg == Approx(-90.0));
    CHECK(AnalyzerSetting(22.5).angle_deg == Approx(22.5));
    CHECK(AnalyzerSetting(180.0).angle_deg == Approx(0.0).margin(1e-12));
}

TEST_CASE("density matrix validation", "[quantum_state]") {
    Mat4 bad = Mat4::Identity() * 0.25;
    bad(0, 1) = {0.1, 0.0};
    CHECK_THROWS_AS(DensityMatrix(bad), std::invalid_argument);  // not Hermitian

    Mat4 off_trace = Mat4::Identity() * 0.3;
    CHECK_THROWS_AS(DensityMatrix(off_trace), std::invalid_argument);

    Mat4 negative = Mat4::Identity() * 0.25;
    negative(3, 3) = {-0.25, 0.0};
    negative(0, 0) = {0.75, 0.0};
    CHECK_THROWS_AS(DensityMatrix(negative), std::invalid_argument);

    CHECK_NOTHROW(DensityMatrix(Mat4::Identity() * 0.25));
}

TEST_CASE("werner mixture structure", "[quantum_state]") {
    const auto target = state::phi_minus();

    const auto pure = state::werner_mix(1.0, target);
    const Mat4 projector = target.amplitudes() * target.amplitudes().adjoint();
    CHECK((pure.matrix() - projector).cwiseAbs().maxCoeff() < 1e-14);

    const auto mixed = state::werner_mix(0.0, target);
    CHECK((mixed.matrix() - Mat4::Identity() * 0.25).cwiseAbs().maxCoeff() < 1e-14);

    // Eigendecomposition oracle: eigenvalues (1+3V)/4 once and (1-V)/4 thrice.
    const double v = 0.948;
    Eigen::SelfAdjointEigenSolver<Mat4> es(state::werner_mix(v, target).matrix(),
                                           Eigen::EigenvaluesOnly);
    const auto ev = es.eigenvalues();
    CHECK(ev(3) == Approx((1.0 + 3.0 * v) / 4.0).margin(1e-12));
    CHECK(ev(3) == Approx(0.961).margin(1e-12));
    for (int i = 0; i < 3; ++i) CHECK(ev(i) == Approx((1.0 - v) / 4.0).margin(1e-12));
    CHECK(ev(0) == Approx(0.013).margin(1e-12));

    CHECK_THROWS_AS(state::werner_mix(-0.1, target), std::invalid_argument);
    CHECK_THROWS_AS(state::werner_mix(1.1, target), std::invalid_argument);
}

TEST_CASE("coincidence probabilities", "[quantum_state]") {
    const auto target = state::phi_minus();

    for (double v : {0.0, 0.5, 1.0}) {
        const auto rho = state::werner_mix(v, target);
        CHECK(state::coincidence_probability(rho, 0.0, 0.0) == Approx((1.0 + v) / 4.0).margin(1e-12));
    }
    CHECK(state::coincidence_probability(state::werner_mix(1.0, target), 0.0, 0.0) ==
          Approx(0.5).margin(1e-12));

    // Zero coincidence requires a + b = 90 deg; at (0, 45) the closed form
    // (1 + V cos 2(a+b))/4 gives exactly 1/4.
    const auto pure = DensityMatrix::pure(target);
    CHECK(state::coincidence_probability(pure, 45.0, 45.0) == Approx(0.0).margin(1e-12));
    CHECK(state::coincidence_probability(pure, 0.0, 45.0) == Approx(0.25).margin(1e-12));

    CHECK(state::coincidence_probability(state::werner_mix(0.958, target), 22.5, 22.5) ==
          Approx(0.25).margin(1e-12));
}

TEST_CASE("closed form on an angle grid and outcome completeness", "[quantum_state]") {
    const double v = 0.73;
    const auto rho = state::werner_mix(v, state::phi_minus());
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            const double a = -90.0 + 9.0 * i;
            const double b = -90.0 + 9.0 * j;
            const double p = state::coincidence_probability(rho, a, b);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK(p == Approx(werner_coincidence_oracle(v, a, b)).margin(1e-10));
            const double sum = state::coincidence_probability(rho, a, b) +
                               state::coincidence_probability(rho, a, b + 90.0) +
                               state::coincidence_probability(rho, a + 90.0, b) +
                               state::coincidence_probability(rho, a + 90.0, b + 90.0);
            CHECK(sum == Approx(1.0).margin(1e-10));
        }
    }
}

TEST_CASE("correlation values", "[quantum_state]") {
    const auto pure = DensityMatrix::pure(state::phi_minus());
    CHECK(state::correlation(pure, 0.0, 0.0) == Approx(1.0).margin(1e-12));
    CHECK(state::correlation(pure, 0.0, -22.5) ==
          Approx(std::cos(kPi / 4.0)).margin(1e-12));  // 1/sqrt(2)
    const auto mixed = state::werner_mix(0.0, state::phi_minus());
    CHECK(state::correlation(mixed, 17.0, -38.0) == Approx(0.0).margin(1e-12));
}

TEST_CASE("chsh value at default angles", "[quantum_state]") {
    const auto pure = DensityMatrix::pure(state::phi_minus());
    CHECK(state::chsh_value(pure) == Approx(2.0 * std::numbers::sqrt2).margin(1e-12));

    // 2 sqrt(2) V for Werner mixtures.
    for (double v : {0.0, 0.25, 0.5, 0.958, 1.0}) {
        const auto rho = state::werner_mix(v, state::phi_minus());
        CHECK(state::chsh_value(rho) == Approx(2.0 * std::numbers::sqrt2 * v).margin(1e-10));
    }
    CHECK(state::chsh_value(state::werner_mix(0.958, state::phi_minus())) ==
          Approx(2.7096).margin(5e-4));

    // Product state |HH>: E(a, b) = cos 2a cos 2b at the default angles.
    const auto hh = product_state(0.0, 0.0);
    auto e_prod = [](double a, double b) {
        return std::cos(2 * a * kPi / 180.0) * std::cos(2 * b * kPi / 180.0);
    };
    const double s_oracle = e_prod(0, -22.5) - e_prod(0, -67.5) + e_prod(45, -22.5) +
                            e_prod(45, -67.5);
    CHECK(state::chsh_value(hh) == Approx(s_oracle).margin(1e-12));
    CHECK(state::chsh_value(hh) == Approx(std::numbers::sqrt2).margin(1e-12));
    CHECK(state::chsh_value(hh) <= 2.0 + 1e-9);
}

TEST_CASE("separable states respect the classical bound", "[quantum_state]") {
    rng::Stream st(20260809, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const double a1 = st.uniform() * 180.0 - 90.0;
        const double b1 = st.uniform() * 180.0 - 90.0;
        const double a2 = st.uniform() * 180.0 - 90.0;
        const double b2 = st.uniform() * 180.0 - 90.0;
        const double w = st.uniform();
        const Mat4 rho = w * product_state(a1, b1).matrix() +
                         (1.0 - w) * product_state(a2, b2).matrix();
        CHECK(state::chsh_value(DensityMatrix(rho, false)) <= 2.0 + 1e-9);
    }
}

TEST_CASE("fidelity", "[quantum_state]") {
    const auto target = state::phi_minus();
    CHECK(state::fidelity(DensityMatrix::pure(target), target) == Approx(1.0).margin(1e-12));
    CHECK(state::fidelity(state::werner_mix(0.0, target), target) == Approx(0.25).margin(1e-12));
    CHECK(state::fidelity(state::werner_mix(0.948, target), target) ==
          Approx(0.961).margin(1e-12));
    for (double v = 0.0; v <= 1.0; v += 0.05) {
        CHECK(state::fidelity(state::werner_mix(v, target), target) ==
              Approx((1.0 + 3.0 * v) / 4.0).margin(1e-12));
    }
}

TEST_CASE("operations invariant under scale-then-renormalize", "[quantum_state]") {
    const auto rho = state::werner_mix(0.81, state::phi_minus());
    const Mat4 scaled = 3.7 * rho.matrix();
    const DensityMatrix renorm(scaled / scaled.trace().real(), false);
    CHECK(state::coincidence_probability(renorm, 13.0, -47.0) ==
          Approx(state::coincidence_probability(rho, 13.0, -47.0)).margin(1e-14));
    CHECK(state::correlation(renorm, 13.0, -47.0) ==
          Approx(state::correlation(rho, 13.0, -47.0)).margin(1e-14));
    CHECK(state::chsh_value(renorm) == Approx(state::chsh_value(rho)).margin(1e-14));
    CHECK(state::fidelity(renorm, state::phi_minus()) ==
          Approx(state::fidelity(rho, state::phi_minus())).margin(1e-14));
}
