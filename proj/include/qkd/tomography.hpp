// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qkd/quantum_state.hpp"
#include "qkd/rng.hpp"

namespace qkd::tomo {

using state::complexd;
using state::Mat4;
using state::Vec4;

/// One projection setting: product ket |signal> (x) |idler>.
struct Projection {
    char signal;  // one of H V D R
    char idler;
    Vec4 ket;
};

namespace detail {
inline Eigen::Vector2cd single_ket(char label) {
    const double s = 1.0 / std::numbers::sqrt2;
    switch (label) {
        case 'H': return {complexd(1, 0), complexd(0, 0)};
        case 'V': return {complexd(0, 0), complexd(1, 0)};
        case 'D': return {complexd(s, 0), complexd(s, 0)};
        case 'A': return {complexd(s, 0), complexd(-s, 0)};
        case 'R': return {complexd(s, 0), complexd(0, s)};
        case 'L': return {complexd(s, 0), complexd(0, -s)};
        default: throw std::invalid_argument("single_ket: unknown polarization label");
    }
}

inline Vec4 product_ket(char a, char b) {
    const auto ka = single_ket(a), kb = single_ket(b);
    Vec4 out;
    out << ka(0) * kb(0), ka(0) * kb(1), ka(1) * kb(0), ka(1) * kb(1);
    return out;
}
}  // namespace detail

/// Informationally complete 16-projection set: {H,V,D,R} x {H,V,D,R} in
/// row-major order, so the first element is (H,H). Single-qubit projectors
/// onto H, V, D and R span the 2x2 operator space, so the product set has
/// design-matrix rank 16 (cf. James, Kwiat, Munro, White, PRA 64, 052312).
struct TomoSettings {
    std::vector<Projection> projections;

    static TomoSettings standard() {
        static constexpr std::array<char, 4> kLabels{'H', 'V', 'D', 'R'};
        TomoSettings s;
        s.projections.reserve(16);
        for (char a : kLabels)
            for (char b : kLabels)
                s.projections.push_back({a, b, detail::product_ket(a, b)});
        return s;
    }

    /// Rank of the 16x16 design matrix whose rows are vec(|k><k|).
    int design_rank() const {
        Eigen::MatrixXcd design(projections.size(), 16);
        for (std::size_t j = 0; j < projections.size(); ++j) {
            const Mat4 proj = projections[j].ket * projections[j].ket.adjoint();
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) design(j, 4 * r + c) = proj(r, c);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(design);
        qr.setThreshold(1e-10);
        return static_cast<int>(qr.rank());
    }
};

inline TomoSettings standard_projection_set() { return TomoSettings::standard(); }

struct TomoCounts {
    std::vector<std::uint64_t> n;       // one count per setting
    std::vector<double> exposure;       // relative acquisition weights (default 1)

    double weight(std::size_t j) const { return exposure.empty() ? 1.0 : exposure[j]; }
};

/// Poisson counts n_j ~ Poisson(n_per_setting * tr(rho Pi_j)).
inline TomoCounts simulate_tomo_counts(const state::DensityMatrix& rho, double n_per_setting,
                                       std::uint64_t seed,
                                       const TomoSettings& settings = TomoSettings::standard()) {
    if (n_per_setting <= 0.0)
        throw std::invalid_argument("simulate_tomo_counts: n_per_setting must be > 0");
    TomoCounts out;
    out.n.reserve(settings.projections.size());
    for (std::size_t j = 0; j < settings.projections.size(); ++j) {
        const Vec4& k = settings.projections[j].ket;
        const double p = std::max((k.adjoint() * rho.matrix() * k)(0).real(), 0.0);
        rng::Stream st(seed, j);
        out.n.push_back(st.poisson(n_per_setting * p));
    }
    return out;
}

struct MLEResult {
    state::DensityMatrix rho_hat{Mat4::Identity() * 0.25, false};
    double log_likelihood = 0.0;  // Poisson log-likelihood (up to the n_j! terms)
    double fidelity_vs_target = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

/// Lower-triangular T from 16 real parameters: diagonal first, then (re, im)
/// for each strictly-lower entry.
inline Mat4 t_from_params(const std::array<double, 16>& th) {
    Mat4 t = Mat4::Zero();
    t(0, 0) = th[0];
    t(1, 1) = th[1];
    t(2, 2) = th[2];
    t(3, 3) = th[3];
    t(1, 0) = complexd(th[4], th[5]);
    t(2, 0) = complexd(th[6], th[7]);
    t(2, 1) = complexd(th[8], th[9]);
    t(3, 0) = complexd(th[10], th[11]);
    t(3, 1) = complexd(th[12], th[13]);
    t(3, 2) = complexd(th[14], th[15]);
    return t;
}

struct ParamSlot {
    int row, col;
    bool imag;
};

inline const std::array<ParamSlot, 16>& param_slots() {
    static const std::array<ParamSlot, 16> slots{{{0, 0, false},
                                                  {1, 1, false},
                                                  {2, 2, false},
                                                  {3, 3, false},
                                                  {1, 0, false},
                                                  {1, 0, true},
                                                  {2, 0, false},
                                                  {2, 0, true},
                                                  {2, 1, false},
                                                  {2, 1, true},
                                                  {3, 0, false},
                                                  {3, 0, true},
                                                  {3, 1, false},
                                                  {3, 1, true},
                                                  {3, 2, false},
                                                  {3, 2, true}}};
    return slots;
}

}  // namespace detail

/// Linear-inversion estimate projected onto physical states: solve the 16x16
/// linear system for rho from the measured frequencies, then clip negative
/// eigenvalues and renormalize. Used as the MLE starting point and as a
/// likelihood baseline in tests.
inline state::DensityMatrix linear_inversion_estimate(const TomoCounts& counts,
                                                      const TomoSettings& settings) {
    const std::size_t m = settings.projections.size();
    if (counts.n.size() != m)
        throw std::invalid_argument("linear_inversion_estimate: counts/settings size mismatch");
    double total = 0.0;
    for (auto v : counts.n) total += static_cast<double>(v);
    if (total <= 0.0) throw std::invalid_argument("linear_inversion_estimate: all counts zero");
    // The unknown intensity scale is absorbed into the solution and removed
    // by the final normalization.
    Eigen::MatrixXcd design(m, 16);
    Eigen::VectorXcd rhs(m);
    for (std::size_t j = 0; j < m; ++j) {
        const Mat4 proj = settings.projections[j].ket * settings.projections[j].ket.adjoint();
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) design(j, 4 * r + c) = std::conj(proj(r, c));
        rhs(j) = static_cast<double>(counts.n[j]) / counts.weight(j);
    }
    const Eigen::VectorXcd x = design.colPivHouseholderQr().solve(rhs);
    Mat4 raw;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) raw(r, c) = x(4 * r + c);
    raw = 0.5 * (raw + raw.adjoint()).eval();  // fold numerical asymmetry
    Eigen::SelfAdjointEigenSolver<Mat4> es(raw);
    Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
    if (ev.sum() <= 0.0) ev.setConstant(0.25);
    ev /= ev.sum();
    Mat4 rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho *= 1.0 / rho.trace().real();
    return state::DensityMatrix(rho, false);
}

/// Poisson log-likelihood of intensities lambda_j = scale * w_j p_j(rho),
/// with the scale chosen optimally for the given shape.
inline double poisson_log_likelihood(const state::DensityMatrix& rho, const TomoCounts& counts,
                                     const TomoSettings& settings) {
    const std::size_t m = settings.projections.size();
    double total = 0.0, psum = 0.0;
    std::vector<double> p(m);
    for (std::size_t j = 0; j < m; ++j) {
        const Vec4& k = settings.projections[j].ket;
        p[j] = std::max((k.adjoint() * rho.matrix() * k)(0).real(), 1e-300) * counts.weight(j);
        total += static_cast<double>(counts.n[j]);
        psum += p[j];
    }
    const double scale = total / psum;
    double ll = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double lam = scale * p[j];
        ll += static_cast<double>(counts.n[j]) * std::log(lam) - lam;
    }
    return ll;
}

/// Maximum-likelihood reconstruction over physical states via the
/// rho = T^dag T / tr(T^dag T) parameterization, maximizing the Poisson
/// log-likelihood with L-BFGS. Counts are normalized internally so the
/// convergence thresholds (log-likelihood gain < 1e-10 per iteration, or
/// gradient norm < 1e-8) are scale-free; the iteration cap reports
/// converged = false.
inline MLEResult mle_reconstruct(const TomoCounts& counts, const TomoSettings& settings,
                                 const state::TwoQubitState& target = state::phi_minus(),
                                 int max_iterations = 10'000) {
    const std::size_t m = settings.projections.size();
    if (counts.n.size() != m)
        throw std::invalid_argument("mle_reconstruct: counts/settings size mismatch");
    if (settings.design_rank() < 16)
        throw std::invalid_argument("mle_reconstruct: settings are not informationally complete");
    double total = 0.0;
    for (auto v : counts.n) total += static_cast<double>(v);
    if (total <= 0.0) throw std::invalid_argument("mle_reconstruct: all counts zero");

    // Normalized counts keep the objective O(1) regardless of exposure.
    std::vector<double> nn(m);
    for (std::size_t j = 0; j < m; ++j) nn[j] = static_cast<double>(counts.n[j]) / total;

    // Start from the projected linear inversion, blended with the maximally
    // mixed state so the Cholesky factor is well-defined.
    const state::DensityMatrix li = linear_inversion_estimate(counts, settings);
    Mat4 start = 0.99 * li.matrix() + 0.01 * 0.25 * Mat4::Identity();
    // Intensity scale folded into T: sum_j w_j p_j(start) should match 1.
    double psum = 0.0;
    std::vector<Vec4> kets(m);
    for (std::size_t j = 0; j < m; ++j) {
        kets[j] = settings.projections[j].ket;
        psum += (kets[j].adjoint() * start * kets[j])(0).real() * counts.weight(j);
    }
    start *= 1.0 / psum;
    // Lower-triangular T with T^dag T = start ("reverse Cholesky"): flip the
    // matrix with the exchange permutation, factor, flip back.
    Mat4 flip = Mat4::Zero();
    for (int i = 0; i < 4; ++i) flip(i, 3 - i) = 1.0;
    const Eigen::LLT<Mat4> llt((flip * start * flip).eval());
    const Mat4 upper = flip * Mat4(llt.matrixL()) * flip;
    Mat4 tmat = upper.adjoint();
    // Make the diagonal real (phase freedom of the factorization).
    for (int r = 0; r < 4; ++r) {
        const complexd d = tmat(r, r);
        if (std::abs(d) > 0.0) {
            const complexd phase = std::conj(d) / std::abs(d);
            tmat.row(r) *= phase;
        }
    }

    std::array<double, 16> th{};
    {
        const auto& slots = detail::param_slots();
        for (int i = 0; i < 16; ++i) {
            const auto& s = slots[i];
            th[i] = s.imag ? tmat(s.row, s.col).imag() : tmat(s.row, s.col).real();
        }
    }

    auto loglik = [&](const std::array<double, 16>& params, std::vector<double>* lam_out) {
        const Mat4 t = detail::t_from_params(params);
        double ll = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const Vec4 tk = t * kets[j];
            double lam = tk.squaredNorm() * counts.weight(j);
            if (lam < 1e-300) lam = 1e-300;
            if (lam_out) (*lam_out)[j] = lam;
            ll += nn[j] * std::log(lam) - lam;
        }
        return ll;
    };

    std::vector<double> lam(m);
    const auto& slots = detail::param_slots();
    using Vec16 = std::array<double, 16>;
    // d lambda_j / d th_i = 2 Re(<T k_j, E_i k_j>) w_j with E_i the
    // elementary matrix of parameter i.
    auto gradient = [&](const Vec16& params, const std::vector<double>& lam_in) {
        const Mat4 t = detail::t_from_params(params);
        Vec16 grad{};
        for (std::size_t j = 0; j < m; ++j) {
            const Vec4 tk = t * kets[j];
            const double coeff = nn[j] / lam_in[j] - 1.0;
            for (int i = 0; i < 16; ++i) {
                const auto& s = slots[i];
                const complexd unit = s.imag ? complexd(0, 1) : complexd(1, 0);
                const complexd comp = unit * kets[j](s.col);
                const double dlam = 2.0 * (std::conj(tk(s.row)) * comp).real() * counts.weight(j);
                grad[i] += coeff * dlam;
            }
        }
        return grad;
    };
    auto dot = [](const Vec16& a, const Vec16& b) {
        double s = 0.0;
        for (int i = 0; i < 16; ++i) s += a[i] * b[i];
        return s;
    };

    double ll = loglik(th, &lam);
    Vec16 grad = gradient(th, lam);
    MLEResult res{};

    // L-BFGS ascent (two-loop recursion) with Armijo backtracking.
    constexpr int kHistory = 10;
    std::vector<Vec16> s_hist, y_hist;
    std::vector<double> rho_hist;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const double gnorm = std::sqrt(dot(grad, grad));
        if (gnorm < 1e-8) {
            res.converged = true;
            break;
        }
        Vec16 dir = grad;  // ascent direction from the inverse-Hessian estimate
        {
            const int h = static_cast<int>(s_hist.size());
            std::vector<double> alpha(h);
            for (int i = h - 1; i >= 0; --i) {
                alpha[i] = rho_hist[i] * dot(s_hist[i], dir);
                for (int k = 0; k < 16; ++k) dir[k] -= alpha[i] * y_hist[i][k];
            }
            if (h > 0) {
                const double gamma =
                    dot(s_hist[h - 1], y_hist[h - 1]) / dot(y_hist[h - 1], y_hist[h - 1]);
                for (int k = 0; k < 16; ++k) dir[k] *= gamma;
            }
            for (int i = 0; i < h; ++i) {
                const double beta = rho_hist[i] * dot(y_hist[i], dir);
                for (int k = 0; k < 16; ++k) dir[k] += (alpha[i] - beta) * s_hist[i][k];
            }
        }
        double slope = dot(grad, dir);
        if (slope <= 0.0) {  // fall back to steepest ascent
            dir = grad;
            slope = gnorm * gnorm;
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }
        double step = 1.0;
        bool accepted = false;
        Vec16 cand{};
        std::vector<double> cand_lam(m);
        double cand_ll = ll;
        for (int bt = 0; bt < 60; ++bt) {
            for (int i = 0; i < 16; ++i) cand[i] = th[i] + step * dir[i];
            cand_ll = loglik(cand, &cand_lam);
            if (cand_ll >= ll + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.converged = true;  // no ascent at floating-point resolution
            break;
        }
        const Vec16 grad_new = gradient(cand, cand_lam);
        Vec16 s_vec{}, y_vec{};
        for (int i = 0; i < 16; ++i) {
            s_vec[i] = cand[i] - th[i];
            y_vec[i] = grad[i] - grad_new[i];  // curvature of -ll (minimization form)
        }
        if (dot(s_vec, y_vec) > 1e-14) {
            s_hist.push_back(s_vec);
            y_hist.push_back(y_vec);
            rho_hist.push_back(1.0 / dot(s_vec, y_vec));
            if (static_cast<int>(s_hist.size()) > kHistory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        const double gain = cand_ll - ll;
        th = cand;
        lam.swap(cand_lam);
        ll = cand_ll;
        grad = grad_new;
        if (gain < 1e-10) {
            res.converged = true;
            ++it;
            break;
        }
    }
    res.iterations = it;

    const Mat4 t = detail::t_from_params(th);
    Mat4 rho = (t.adjoint() * t).eval();
    rho /= rho.trace().real();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    res.rho_hat = state::DensityMatrix(rho, false);
    res.log_likelihood = poisson_log_likelihood(res.rho_hat, counts, settings);
    res.fidelity_vs_target = state::fidelity(res.rho_hat, target);
    return res;
}

}  // namespace qkd::tomo
