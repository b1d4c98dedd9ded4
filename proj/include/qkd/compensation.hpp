// Copyright (c) 2026 qkdsim developers
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkd/entangled_source.hpp"

namespace qkd::comp {

enum class Polarization { ordinary, extraordinary };

/// Temperature-dependent Sellmeier model for a uniaxial crystal. Two
/// published coefficient families are shipped:
///  - Edwards, Lawrence, Opt. Quantum Electron. 16, 373 (1984):
///    n^2 = A1 + (A2 + B1 F)/(l^2 - (A3 + B2 F)^2) + B3 F - A4 l^2,
///    F = (T - 24.5)(T + 570.5), l in um.
///  - Gayer, Sacks, Galun, Arie, Appl. Phys. B 91, 343 (2008), 5% MgO:CLN:
///    n^2 = a1 + b1 f + (a2 + b2 f)/(l^2 - (a3 + b3 f)^2)
///        + (a4 + b4 f)/(l^2 - a5^2) - a6 l^2,  f = (T - 24.5)(T + 570.82).
struct IndexModel {
    enum class Form { edwards_lawrence, gayer };

    std::string id;
    std::string source;  // literature citation
    Form form;
    std::array<double, 7> ordinary;       // EL: A1 A2 A3 A4 B1 B2 B3 (3 unused)
    std::array<double, 7> extraordinary;  // Gayer: uses coeff2 below as well
    std::array<double, 4> ordinary2{};    // Gayer only: a4 a5 a6 b4
    std::array<double, 4> extraordinary2{};
    double lambda_min_nm;
    double lambda_max_nm;
    double temp_min_c;
    double temp_max_c;
};

/// Congruent (undoped) lithium niobate, Edwards & Lawrence 1984.
inline const IndexModel& cln_edwards_lawrence() {
    static const IndexModel model{
        "cln-edwards-lawrence-1984",
        "D.H. Jundt-lineage congruent LiNbO3; Edwards & Lawrence, Opt. Quantum Electron. 16, "
        "373-375 (1984)",
        IndexModel::Form::edwards_lawrence,
        {4.9048, 0.11775, 0.21802, 0.027153, 2.2314e-8, -2.9671e-8, 2.1429e-8},
        {4.5820, 0.09921, 0.21090, 0.021940, 5.2716e-8, -4.9143e-8, 2.2971e-7},
        {},
        {},
        400.0,
        4000.0,
        0.0,
        400.0,
    };
    return model;
}

/// 5 mol% MgO-doped congruent lithium niobate, Gayer et al. 2008.
inline const IndexModel& mgo_cln_gayer() {
    static const IndexModel model{
        "mgo-cln-gayer-2008",
        "Gayer, Sacks, Galun, Arie, Appl. Phys. B 91, 343-348 (2008), 5% MgO-doped CLN",
        IndexModel::Form::gayer,
        {5.653, 0.1185, 0.2091, 0.0, 7.941e-7, 3.134e-8, -4.641e-9},
        {5.756, 0.0983, 0.2020, 0.0, 2.860e-6, 4.700e-8, 6.113e-8},
        {89.61, 10.85, 1.97e-2, -2.188e-6},
        {189.32, 12.52, 1.32e-2, 1.516e-4},
        500.0,
        4000.0,
        20.0,
        250.0,
    };
    return model;
}

inline const IndexModel& index_model_by_id(const std::string& id) {
    if (id == cln_edwards_lawrence().id) return cln_edwards_lawrence();
    if (id == mgo_cln_gayer().id) return mgo_cln_gayer();
    throw std::invalid_argument("unknown index model id: " + id);
}

/// Sellmeier evaluation with validity-range enforcement.
inline double refractive_index(const IndexModel& model, Polarization pol, double lambda_nm,
                               double temp_c) {
    if (lambda_nm < model.lambda_min_nm || lambda_nm > model.lambda_max_nm)
        throw std::out_of_range("refractive_index: wavelength outside model validity range");
    if (temp_c < model.temp_min_c || temp_c > model.temp_max_c)
        throw std::out_of_range("refractive_index: temperature outside model validity range");
    const double lam = lambda_nm / 1000.0;  // um
    const double l2 = lam * lam;
    double n2 = 0.0;
    if (model.form == IndexModel::Form::edwards_lawrence) {
        const auto& c = pol == Polarization::ordinary ? model.ordinary : model.extraordinary;
        const double f = (temp_c - 24.5) * (temp_c + 570.5);
        const double res = c[2] + c[5] * f;
        n2 = c[0] + (c[1] + c[4] * f) / (l2 - res * res) + c[6] * f - c[3] * l2;
    } else {
        const auto& c = pol == Polarization::ordinary ? model.ordinary : model.extraordinary;
        const auto& c2 = pol == Polarization::ordinary ? model.ordinary2 : model.extraordinary2;
        const double f = (temp_c - 24.5) * (temp_c + 570.82);
        const double res = c[2] + c[6] * f;
        n2 = c[0] + c[4] * f + (c[1] + c[5] * f) / (l2 - res * res) +
             (c2[0] + c2[3] * f) / (l2 - c2[1] * c2[1]) - c2[2] * l2;
    }
    if (n2 <= 0.0) throw std::domain_error("refractive_index: nonphysical evaluation");
    return std::sqrt(n2);
}

/// Extraordinary index at propagation angle theta to the optic axis:
/// 1/n^2(theta) = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2.
inline double angle_tuned_index(const IndexModel& model, double theta_deg, double lambda_nm,
                                double temp_c) {
    const double no = refractive_index(model, Polarization::ordinary, lambda_nm, temp_c);
    const double ne = refractive_index(model, Polarization::extraordinary, lambda_nm, temp_c);
    const double t = theta_deg * std::numbers::pi / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    return 1.0 / std::sqrt(c * c / (no * no) + s * s / (ne * ne));
}

/// Wavelength-dependent phase difference accumulated between the two
/// pair-amplitude terms of a crossed-crystal type-0 source, with the pair
/// born at the crystal entrance face:
/// dphi = 2 pi L (n_o(ls)/ls + n_o(li)/li - n_e(lp)/lp), li from energy
/// conservation.
inline double phase_difference(double lambda_s_nm, double lambda_p_nm, double crystal_length_mm,
                               const IndexModel& model, double temp_c) {
    if (crystal_length_mm < 0.0)
        throw std::invalid_argument("phase_difference: crystal length must be >= 0");
    const double lambda_i_nm = source::conjugate_wavelength(lambda_p_nm, lambda_s_nm);
    const double no_s = refractive_index(model, Polarization::ordinary, lambda_s_nm, temp_c);
    const double no_i = refractive_index(model, Polarization::ordinary, lambda_i_nm, temp_c);
    const double ne_p = refractive_index(model, Polarization::extraordinary, lambda_p_nm, temp_c);
    const double length_nm = crystal_length_mm * 1e6;
    return 2.0 * std::numbers::pi * length_nm *
           (no_s / lambda_s_nm + no_i / lambda_i_nm - ne_p / lambda_p_nm);
}

/// Which ray the vertically polarized signal photon sees inside the
/// compensation crystal. The compensating orientation (V photon ordinary)
/// gives the correction term the sign that can cancel the source's phase
/// slope; the opposite mounting adds to it.
enum class CompensatorOrientation {
    signal_v_ordinary,       // correction subtracted (compensating mount)
    signal_v_extraordinary,  // correction added
};

struct CompensatorSpec {
    double length_mm = 5.0;
    double cut_angle_deg = 45.4;
    double temperature_c = 32.5;
    CompensatorOrientation orientation = CompensatorOrientation::signal_v_ordinary;

    void validate() const {
        if (length_mm < 0.0) throw std::invalid_argument("compensator.length_mm must be >= 0");
        if (!(cut_angle_deg >= 0.0 && cut_angle_deg <= 90.0))
            throw std::invalid_argument("compensator.cut_angle_deg must be in [0, 90]");
    }
};

/// dphi_c = dphi +/- 2 pi L_c (n_e(theta,T) - n_o(T)) / lambda_s, sign per
/// the crystal orientation.
inline double compensated_phase(double delta_phi_rad, const CompensatorSpec& comp,
                                double lambda_s_nm, const IndexModel& model) {
    comp.validate();
    const double ne_t = angle_tuned_index(model, comp.cut_angle_deg, lambda_s_nm, comp.temperature_c);
    const double no = refractive_index(model, Polarization::ordinary, lambda_s_nm, comp.temperature_c);
    const double length_nm = comp.length_mm * 1e6;
    const double term = 2.0 * std::numbers::pi * length_nm * (ne_t - no) / lambda_s_nm;
    const double sign = comp.orientation == CompensatorOrientation::signal_v_ordinary ? -1.0 : 1.0;
    return delta_phi_rad + sign * term;
}

/// Source-crystal description needed to evaluate the uncompensated phase.
struct SpdcPhaseParams {
    double lambda_p_nm = 1064.0;
    double crystal_length_mm = 4.5;
    double temp_c = 75.0;
    const IndexModel* model = &cln_edwards_lawrence();
};

struct SpectralBand {
    double lambda_lo_nm = 1547.0;
    double lambda_hi_nm = 1563.0;
    int points = 161;

    void validate() const {
        if (!(lambda_hi_nm > lambda_lo_nm) || points < 2)
            throw std::invalid_argument("spectral band: need hi > lo and >= 2 points");
    }
};

enum class FreeParameter { temperature, tilt_angle };

struct ScanRange {
    double lo;
    double hi;
    double step;

    void validate() const {
        if (!(hi > lo) || step <= 0.0) throw std::invalid_argument("scan range: need hi > lo, step > 0");
    }
};

struct OptimizationResult {
    double optimal_value = 0.0;      // temperature in C or cut angle in degrees
    double flatness_before = 0.0;    // at the fixed spec (as built)
    double flatness_after = 0.0;     // at the optimum
    FreeParameter parameter = FreeParameter::temperature;
};

namespace detail {
/// Max - min of the compensated phase over the band.
inline double band_flatness(const SpdcPhaseParams& spdc, const CompensatorSpec& comp,
                            const IndexModel& comp_model, const SpectralBand& band) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const double dl = (band.lambda_hi_nm - band.lambda_lo_nm) / (band.points - 1);
    for (int i = 0; i < band.points; ++i) {
        const double ls = band.lambda_lo_nm + i * dl;
        const double raw = phase_difference(ls, spdc.lambda_p_nm, spdc.crystal_length_mm,
                                            *spdc.model, spdc.temp_c);
        const double v = compensated_phase(raw, comp, ls, comp_model);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

inline double golden_min(const std::function<double(double)>& f, double a, double b) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-7 * std::max(1.0, std::abs(b))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}
}  // namespace detail

/// Grid scan plus golden-section refinement of the band flatness over the
/// chosen free parameter (compensator temperature or cut angle), everything
/// else held at `fixed`. Ties resolve to the lowest parameter value.
inline OptimizationResult optimize_compensation(FreeParameter param, const ScanRange& range,
                                                const SpectralBand& band,
                                                const CompensatorSpec& fixed,
                                                const SpdcPhaseParams& spdc,
                                                const IndexModel& comp_model = mgo_cln_gayer()) {
    range.validate();
    band.validate();
    fixed.validate();

    auto flat_at = [&](double value) {
        CompensatorSpec spec = fixed;
        if (param == FreeParameter::temperature)
            spec.temperature_c = value;
        else
            spec.cut_angle_deg = value;
        return detail::band_flatness(spdc, spec, comp_model, band);
    };

    double best_v = range.lo;
    double best_f = flat_at(range.lo);
    const auto n_steps = static_cast<std::size_t>(std::floor((range.hi - range.lo) / range.step + 1e-9));
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double v = range.lo + static_cast<double>(i) * range.step;
        const double f = flat_at(v);
        if (f < best_f) {
            best_f = f;
            best_v = v;
        }
    }
    // Local refinement between the grid neighbours of the best point.
    const double lo = std::max(range.lo, best_v - range.step);
    const double hi = std::min(range.hi, best_v + range.step);
    const double refined = detail::golden_min(flat_at, lo, hi);
    const double refined_f = flat_at(refined);

    OptimizationResult out{};
    out.parameter = param;
    out.flatness_before = detail::band_flatness(spdc, fixed, comp_model, band);
    if (refined_f <= best_f) {
        out.optimal_value = refined;
        out.flatness_after = refined_f;
    } else {
        out.optimal_value = best_v;
        out.flatness_after = best_f;
    }
    return out;
}

struct PhaseMapRow {
    double lambda_s_nm;
    double delta_phi_rad;
    double delta_phi_compensated_rad;
};

/// Tabulates (lambda_s, dphi, dphi_c) over the band for external plotting.
inline std::vector<PhaseMapRow> phase_map(const SpdcPhaseParams& spdc, const CompensatorSpec& comp,
                                          const IndexModel& comp_model, const SpectralBand& band) {
    band.validate();
    comp.validate();
    std::vector<PhaseMapRow> rows;
    rows.reserve(band.points);
    const double dl = (band.lambda_hi_nm - band.lambda_lo_nm) / (band.points - 1);
    for (int i = 0; i < band.points; ++i) {
        const double ls = band.lambda_lo_nm + i * dl;
        const double raw =
            phase_difference(ls, spdc.lambda_p_nm, spdc.crystal_length_mm, *spdc.model, spdc.temp_c);
        rows.push_back({ls, raw, compensated_phase(raw, comp, ls, comp_model)});
    }
    return rows;
}

}  // namespace qkd::comp
