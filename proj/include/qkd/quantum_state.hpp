// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace qkd::state {

using complexd = std::complex<double>;
using Vec4 = Eigen::Vector4cd;
using Mat4 = Eigen::Matrix4cd;

// Basis order is (HH, HV, VH, VV) everywhere in this library.

/// Pure two-qubit polarization state. Construction enforces unit norm.
class TwoQubitState {
  public:
    explicit TwoQubitState(const Vec4& amplitudes) : amps_(amplitudes) {
        if (std::abs(amps_.squaredNorm() - 1.0) > 1e-12)
            throw std::invalid_argument("TwoQubitState: amplitudes are not normalized");
    }
    const Vec4& amplitudes() const noexcept { return amps_; }

  private:
    Vec4 amps_;
};

/// (|HH> + e^{i phi} |VV>)/sqrt(2). phi = pi gives the Phi- Bell state.
inline TwoQubitState bell_state(double phase_rad) {
    if (!std::isfinite(phase_rad))
        throw std::invalid_argument("bell_state: phase must be finite");
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    Vec4 a;
    a << complexd(inv_sqrt2, 0.0), complexd(0.0, 0.0), complexd(0.0, 0.0),
        std::polar(inv_sqrt2, phase_rad);
    return TwoQubitState(a);
}

inline TwoQubitState phi_minus() { return bell_state(std::numbers::pi); }

/// 4x4 density operator. Validates Hermiticity, unit trace and positivity.
class DensityMatrix {
  public:
    explicit DensityMatrix(const Mat4& rho, bool validate = true) : rho_(rho) {
        if (validate) check(rho_);
    }

    static DensityMatrix pure(const TwoQubitState& psi) {
        const Vec4& a = psi.amplitudes();
        return DensityMatrix(a * a.adjoint(), false);
    }

    const Mat4& matrix() const noexcept { return rho_; }

    static void check(const Mat4& rho) {
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("DensityMatrix: not Hermitian");
        if (std::abs(rho.trace().real() - 1.0) > 1e-12 || std::abs(rho.trace().imag()) > 1e-12)
            throw std::invalid_argument("DensityMatrix: trace != 1");
        Eigen::SelfAdjointEigenSolver<Mat4> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }

  private:
    Mat4 rho_;
};

/// Linear-polarization analyzer direction, normalized to [-90, 90) degrees.
struct AnalyzerSetting {
    double angle_deg;

    AnalyzerSetting(double degrees = 0.0)  // NOLINT: implicit by design
        : angle_deg(normalize(degrees)) {}

    static double normalize(double degrees) {
        double a = std::remainder(degrees, 180.0);
        if (a >= 90.0) a -= 180.0;
        if (a < -90.0) a += 180.0;
        return a;
    }
};

/// rho = V |psi><psi| + (1-V) I/4. Reproduces S = 2*sqrt(2)*V and
/// F = (1+3V)/4 simultaneously for a Bell-state target.
inline DensityMatrix werner_mix(double visibility, const TwoQubitState& target) {
    if (!(visibility >= 0.0 && visibility <= 1.0))
        throw std::invalid_argument("werner_mix: visibility must be in [0,1]");
    const Vec4& a = target.amplitudes();
    Mat4 rho = visibility * (a * a.adjoint()).eval();
    rho += (1.0 - visibility) * 0.25 * Mat4::Identity();
    return DensityMatrix(rho, false);
}

namespace detail {
inline Eigen::Matrix2cd projector2(double angle_deg) {
    const double t = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    Eigen::Matrix2cd p;
    p << c * c, c * s, c * s, s * s;
    return p;
}

inline Mat4 kron2(const Eigen::Matrix2cd& x, const Eigen::Matrix2cd& y) {
    Mat4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = x(i, j) * y;
    return out;
}
}  // namespace detail

/// tr(rho . Pi_a (x) Pi_b): probability that both photons pass linear
/// analyzers at angles a and b.
inline double coincidence_probability(const DensityMatrix& rho, AnalyzerSetting a,
                                      AnalyzerSetting b) {
    const Mat4 proj = detail::kron2(detail::projector2(a.angle_deg), detail::projector2(b.angle_deg));
    double p = (rho.matrix() * proj).trace().real();
    if (p < 0.0 && p > -1e-12) p = 0.0;
    if (p > 1.0 && p < 1.0 + 1e-12) p = 1.0;
    return p;
}

/// E(a,b) = P(pass,pass) + P(fail,fail) - P(pass,fail) - P(fail,pass).
/// For a Werner mixture of Phi-: E = V cos 2(a+b).
inline double correlation(const DensityMatrix& rho, AnalyzerSetting a, AnalyzerSetting b) {
    const AnalyzerSetting a_perp(a.angle_deg + 90.0), b_perp(b.angle_deg + 90.0);
    return coincidence_probability(rho, a, b) + coincidence_probability(rho, a_perp, b_perp) -
           coincidence_probability(rho, a, b_perp) - coincidence_probability(rho, a_perp, b);
}

/// Analyzer angles for the CHSH statistic. The defaults attain
/// S = 2 sqrt(2) V on a Werner mixture of Phi- (E proportional to cos 2(a+b)).
struct ChshAngles {
    AnalyzerSetting a{0.0};
    AnalyzerSetting a_prime{45.0};
    AnalyzerSetting b{-22.5};
    AnalyzerSetting b_prime{-67.5};
};

/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b')   (Clauser-Horne-Shimony-Holt,
/// PRL 23, 880 (1969)). Classical bound 2, quantum maximum 2 sqrt(2).
inline double chsh_value(const DensityMatrix& rho, const ChshAngles& ang = {}) {
    return correlation(rho, ang.a, ang.b) - correlation(rho, ang.a, ang.b_prime) +
           correlation(rho, ang.a_prime, ang.b) + correlation(rho, ang.a_prime, ang.b_prime);
}

/// F = <psi| rho |psi>.
inline double fidelity(const DensityMatrix& rho, const TwoQubitState& target) {
    const Vec4& a = target.amplitudes();
    const complexd f = a.adjoint() * rho.matrix() * a;
    if (std::abs(f.imag()) > 1e-12)
        throw std::runtime_error("fidelity: non-real overlap on a valid density matrix");
    return f.real();
}

}  // namespace qkd::state
