#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "aomdpd/errors.hpp"
#include "aomdpd/numeric.hpp"

namespace aomdpd {

// Experimental setting a record belongs to.
struct Setting {
    double drive_amplitude = 0.0;
    bool dpd = false;

    friend bool operator==(const Setting& a, const Setting& b) {
        return a.dpd == b.dpd && std::abs(a.drive_amplitude - b.drive_amplitude) < 1e-9;
    }
};

// Two-ion even-parity counts from one population measurement.
// Counts are kept as doubles so noiseless-expectation records fit exactly;
// experimental data carries integers.
struct PopulationRecord {
    double even_count = 0.0;
    double total = 0.0;
    Setting setting;

    void validate() const {
        if (total <= 0.0) throw InputError("population record needs total > 0");
        if (even_count < 0.0 || even_count > total)
            throw InputError("even_count must lie in [0, total]");
    }
};

struct ValueWithSigma {
    double value = 0.0;
    double sigma = 0.0;
};

// F_pop = k/N with binomial uncertainty sqrt(F(1-F)/N).
inline ValueWithSigma population_fidelity(const PopulationRecord& rec) {
    rec.validate();
    const double f = rec.even_count / rec.total;
    return {f, std::sqrt(f * (1.0 - f) / rec.total)};
}

inline PopulationRecord pool_populations(std::span<const PopulationRecord> records) {
    if (records.empty()) throw InputError("nothing to pool");
    PopulationRecord out = records.front();
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (!(records[i].setting == out.setting))
            throw InputError("pooled population records must share one setting");
        out.even_count += records[i].even_count;
        out.total += records[i].total;
    }
    return out;
}

struct ParityPoint {
    double phase = 0.0;   // analysis phase, rad, in [0, 2pi)
    double even = 0.0;    // even-parity count
    double total = 0.0;
};

struct ParityScan {
    std::vector<ParityPoint> points;
    Setting setting;
};

struct ParityFit {
    double contrast = 0.0;      // fitted amplitude A of Pi(phi) = A cos(2 phi + phi0)
    double phase0 = 0.0;
    double sigma_contrast = std::numeric_limits<double>::quiet_NaN();
    bool hessian_ok = false;
    double nll = 0.0;
};

namespace detail {
inline double parity_nll(const ParityScan& scan, double contrast, double phase0) {
    const double a = std::clamp(contrast, -1.0 + 1e-12, 1.0 - 1e-12);
    double nll = 0.0;
    for (const auto& pt : scan.points) {
        double p = 0.5 * (1.0 + a * std::cos(2.0 * pt.phase + phase0));
        p = std::clamp(p, 1e-9, 1.0 - 1e-9);
        nll -= pt.even * std::log(p) + (pt.total - pt.even) * std::log(1.0 - p);
    }
    return nll;
}
}  // namespace detail

// Binomial maximum-likelihood fit of the parity fringe Pi(phi) = A cos(2 phi + phi0),
// oscillation frequency fixed at 2 phi. Started from the discrete Fourier
// component of the fringe at frequency 2; sigma_A comes from the inverse
// Hessian of -ln L (central differences, eps = 1e-5), after an eigenvalue
// positive-definiteness check. A failed check is reported, not thrown.
inline ParityFit parity_mle(const ParityScan& scan) {
    if (scan.points.size() < 4) throw DegenerateScan("parity fit needs at least 4 phase points");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& pt : scan.points) {
        if (pt.total <= 0.0) throw DegenerateScan("parity point with no shots");
        if (pt.even < 0.0 || pt.even > pt.total) throw DegenerateScan("parity counts out of range");
        lo = std::min(lo, pt.phase);
        hi = std::max(hi, pt.phase);
    }
    if (hi - lo < std::numbers::pi / 2.0)
        throw DegenerateScan("phase coverage below half a fringe period");

    // Fourier initialization
    std::complex<double> z{0.0, 0.0};
    for (const auto& pt : scan.points) {
        const double parity = 2.0 * pt.even / pt.total - 1.0;
        z += parity * std::exp(std::complex<double>(0.0, -2.0 * pt.phase));
    }
    z *= 2.0 / static_cast<double>(scan.points.size());
    double a0 = std::clamp(std::abs(z), 1e-3, 0.999);
    double p0 = std::arg(z);

    const auto res = numeric::nelder_mead_2d(
        [&](double a, double ph) { return detail::parity_nll(scan, a, ph); }, a0, p0, 0.05, 0.05,
        1e-10, 4000);

    ParityFit fit;
    fit.contrast = std::clamp(res.x0, -1.0 + 1e-12, 1.0 - 1e-12);
    fit.phase0 = res.x1;
    fit.nll = res.fmin;

    // Hessian of -ln L at the optimum
    const double eps = 1e-5;
    auto f = [&](double a, double ph) { return detail::parity_nll(scan, a, ph); };
    const double f0 = f(fit.contrast, fit.phase0);
    const double haa =
        (f(fit.contrast + eps, fit.phase0) - 2.0 * f0 + f(fit.contrast - eps, fit.phase0)) / (eps * eps);
    const double hpp =
        (f(fit.contrast, fit.phase0 + eps) - 2.0 * f0 + f(fit.contrast, fit.phase0 - eps)) / (eps * eps);
    const double hap = (f(fit.contrast + eps, fit.phase0 + eps) - f(fit.contrast + eps, fit.phase0 - eps) -
                        f(fit.contrast - eps, fit.phase0 + eps) + f(fit.contrast - eps, fit.phase0 - eps)) /
                       (4.0 * eps * eps);
    const double tr = haa + hpp;
    const double det = haa * hpp - hap * hap;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    const double lambda_min = 0.5 * (tr - disc);
    if (lambda_min > 0.0 && det > 0.0) {
        fit.hessian_ok = true;
        fit.sigma_contrast = std::sqrt(hpp / det);  // [H^-1]_AA
    }
    return fit;
}

// Counts from repeated scans merged on a common 0.01 rad phase grid
// (round-half-even, the default FE_TONEAREST behavior of llrint).
inline ParityScan merge_parity(std::span<const ParityScan> scans) {
    if (scans.empty()) throw InputError("nothing to merge");
    std::map<long long, ParityPoint> grid;
    for (const auto& scan : scans) {
        if (!(scan.setting == scans.front().setting))
            throw InputError("merged parity scans must share one setting");
        for (const auto& pt : scan.points) {
            const long long idx = std::llrint(pt.phase / 0.01);
            auto& acc = grid[idx];
            acc.phase = 0.01 * static_cast<double>(idx);
            acc.even += pt.even;
            acc.total += pt.total;
        }
    }
    ParityScan out;
    out.setting = scans.front().setting;
    out.points.reserve(grid.size());
    for (const auto& [idx, pt] : grid) out.points.push_back(pt);
    return out;
}

// Bell fidelity from the population and parity halves.
inline ValueWithSigma bell_fidelity(const ValueWithSigma& pop, const ValueWithSigma& par) {
    if (pop.value < 0.0 || pop.value > 1.0 || par.value < 0.0 || par.value > 1.0)
        throw InputError("fidelity inputs must lie in [0, 1]");
    return {0.5 * (pop.value + par.value),
            0.5 * std::sqrt(pop.sigma * pop.sigma + par.sigma * par.sigma)};
}

// Fractional gate-rate uncertainty from a power spread in dB:
// sigma_xi/xi = (ln 10 / 20) * sigma_db.
inline double rate_uncertainty(double sigma_db) {
    if (sigma_db < 0.0) throw InputError("sigma_db must be non-negative");
    return std::numbers::ln10 / 20.0 * sigma_db;
}

struct SimSweepEntry {
    Setting setting;
    double p1_db = 0.0;  // simulated n = 1 gate-tone power, dB (any fixed reference)
};

struct RateMapEntry {
    Setting setting;
    double r_rel = 1.0;
};

// Relative gate rate r_rel = 10^((P1_dB - P1_dB(anchor))/20); rate ~ sqrt(power).
inline std::vector<RateMapEntry> gate_rate_map(std::span<const SimSweepEntry> sweep,
                                               const Setting& anchor = {0.4, false}) {
    const SimSweepEntry* anchor_entry = nullptr;
    for (const auto& e : sweep)
        if (e.setting == anchor) anchor_entry = &e;
    if (!anchor_entry) throw InputError("anchor setting missing from the sweep");
    std::vector<RateMapEntry> out;
    out.reserve(sweep.size());
    for (const auto& e : sweep)
        out.push_back({e.setting, std::pow(10.0, (e.p1_db - anchor_entry->p1_db) / 20.0)});
    return out;
}

struct GatePoint {
    Setting setting;
    double xi0_khz = 0.0;
    double sigma_xi0_khz = 0.0;  // gate-rate calibration uncertainty
    double fidelity = 0.0;
    double sigma_fidelity = 0.0;
};

struct PdCurvePoint {
    Setting setting;
    double r_rel = 1.0;
    double fidelity_pd = 0.0;
};

struct AxisFit {
    double alpha_khz = 0.0;  // kHz per unit relative rate
    double delta = 0.0;      // fidelity offset
    double sigma_alpha = 0.0;
    double sigma_delta = 0.0;
    std::vector<double> residuals_h, residuals_v;  // weighted residuals at the optimum
};

// Stacked weighted least squares for the two shared axis parameters:
//   sum_i (xi_i - alpha r_i)^2 / sigma_h_i^2 + sum_i (F_i - F_PD_i - delta)^2 / sigma_v_i^2.
// Horizontal weights combine the per-point rate calibration sigma with the
// power-fluctuation fraction (rate_uncertainty of power_spread_db) in quadrature.
inline AxisFit fit_axes(std::span<const GatePoint> gate_points,
                        std::span<const PdCurvePoint> pd_curve, double power_spread_db = 0.2) {
    if (gate_points.size() < 2) throw UnderdeterminedFit("need at least 2 gate points");
    const double frac = rate_uncertainty(power_spread_db);

    struct Matched {
        double xi, sh, fid, sv, r, fpd;
    };
    std::vector<Matched> rows;
    for (const auto& gp : gate_points) {
        const PdCurvePoint* match = nullptr;
        for (const auto& pc : pd_curve)
            if (pc.setting == gp.setting) match = &pc;
        if (!match) throw InputError("gate point has no matching photodiode-curve setting");
        const double sh =
            std::sqrt(gp.sigma_xi0_khz * gp.sigma_xi0_khz + frac * frac * gp.xi0_khz * gp.xi0_khz);
        if (!(sh > 0.0) || !(gp.sigma_fidelity > 0.0))
            throw InputError("fit_axes needs positive uncertainties");
        rows.push_back({gp.xi0_khz, sh, gp.fidelity, gp.sigma_fidelity, match->r_rel, match->fidelity_pd});
    }

    double srr = 0.0, srx = 0.0, sv = 0.0, svd = 0.0;
    double rate_spread_lo = std::numeric_limits<double>::infinity(), rate_spread_hi = -rate_spread_lo;
    for (const auto& m : rows) {
        srr += m.r * m.r / (m.sh * m.sh);
        srx += m.r * m.xi / (m.sh * m.sh);
        sv += 1.0 / (m.sv * m.sv);
        svd += (m.fid - m.fpd) / (m.sv * m.sv);
        rate_spread_lo = std::min(rate_spread_lo, m.r);
        rate_spread_hi = std::max(rate_spread_hi, m.r);
    }
    if (!(srr > 0.0) || rate_spread_hi - rate_spread_lo < 1e-12)
        throw UnderdeterminedFit("gate points do not span distinct rates");

    AxisFit fit;
    fit.alpha_khz = srx / srr;
    fit.delta = svd / sv;
    fit.sigma_alpha = 1.0 / std::sqrt(srr);
    fit.sigma_delta = 1.0 / std::sqrt(sv);
    for (const auto& m : rows) {
        fit.residuals_h.push_back((m.xi - fit.alpha_khz * m.r) / m.sh);
        fit.residuals_v.push_back((m.fid - m.fpd - fit.delta) / m.sv);
    }
    return fit;
}

struct EfficiencyPoint {
    double eta_bar = 0.0;
    double infidelity = 0.0;
};

// eta_bar at which the estimated infidelity first crosses each budget,
// interpolating on log-log axes. The curve must be non-decreasing across the
// crossing segment.
inline std::vector<double> threshold_efficiency(std::span<const EfficiencyPoint> curve,
                                                std::span<const double> budgets) {
    if (curve.size() < 2) throw InputError("threshold_efficiency needs at least 2 points");
    std::vector<double> out;
    const auto safe_log = [](double v) { return std::log(std::max(v, 1e-300)); };
    for (double budget : budgets) {
        std::optional<double> found;
        for (std::size_t i = 1; i < curve.size() && !found; ++i) {
            const auto& p0 = curve[i - 1];
            const auto& p1 = curve[i];
            if (p0.infidelity < budget && budget <= p1.infidelity) {
                const double le0 = safe_log(p0.eta_bar), le1 = safe_log(p1.eta_bar);
                const double li0 = safe_log(p0.infidelity), li1 = safe_log(p1.infidelity);
                found = std::exp(le0 + (safe_log(budget) - li0) * (le1 - le0) / (li1 - li0));
            }
        }
        if (!found) throw BudgetNotCrossed("infidelity curve never crosses a requested budget");
        out.push_back(*found);
    }
    return out;
}

}  // namespace aomdpd
