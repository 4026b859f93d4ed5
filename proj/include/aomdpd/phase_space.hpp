#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "aomdpd/errors.hpp"
#include "aomdpd/numeric.hpp"
#include "aomdpd/spectral.hpp"
#include "aomdpd/waveform.hpp"

namespace aomdpd {

// Drive spectrum in harmonic-index units: each tone sits n*xi0 from the
// motional sideband with signed relative amplitude r_n. For fidelity work the
// gate tones are normalized so sum_{n in gate} r_n^2 / n = 1, in which units
// the calibrated Rabi frequency reduces to Omega = pi*xi0/eta.
struct DriveSpectrum {
    std::vector<Tone> tones;       // harmonic >= 0 allowed here (n = 0 is the resonant IM product)
    double xi0 = 1e3;              // Hz
    double eta_ld = 0.026;         // Lamb-Dicke parameter
    std::optional<double> omega;   // rad/s, set by calibrate_omega

    double gate_time() const { return 1.0 / xi0; }

    static DriveSpectrum ideal_cardioid(double xi0 = 1e3, double eta_ld = 0.026) {
        DriveSpectrum s;
        s.xi0 = xi0;
        s.eta_ld = eta_ld;
        const double r = 1.0 / std::sqrt(1.5);
        s.tones = {{1, +r, 0.0}, {2, -r, 0.0}};
        return s;
    }
};

// Omega such that the gate tones alone give Phi(T_g) = pi/2:
// Omega = (pi*xi0/eta) * (sum_{n in {1,2}} r_n^2/n)^(-1/2).
inline double calibrate_omega(DriveSpectrum& spectrum) {
    double s = 0.0;
    for (const auto& t : spectrum.tones)
        if (t.harmonic == 1 || t.harmonic == 2) s += t.amplitude * t.amplitude / t.harmonic;
    if (!(s > 0.0)) throw InvalidGateTones("Omega calibration needs gate tones at n = 1, 2");
    spectrum.omega = std::numbers::pi * spectrum.xi0 / spectrum.eta_ld / std::sqrt(s);
    return *spectrum.omega;
}

namespace detail {
struct TrajScale {
    double omega;
    double c;       // sqrt(2) * eta * Omega / (2 pi xi0)
    double lin;     // sqrt(2) * eta * Omega, slope scale of the n = 0 term
};

inline TrajScale traj_scale(const DriveSpectrum& s) {
    if (!s.omega) throw UncalibratedSpectrum("call calibrate_omega before evaluating trajectories");
    const double om = *s.omega;
    const double lin = std::numbers::sqrt2 * s.eta_ld * om;
    return {om, lin / (2.0 * std::numbers::pi * s.xi0), lin};
}
}  // namespace detail

// Phase-space coordinates at time t. Trajectories start at the origin, so each
// harmonic term is measured from its t = 0 value; with that anchoring every
// nonzero-integer harmonic closes exactly at T_g regardless of amplitude and
// phase. The n = 0 (resonant) term is the n -> 0 limit: a displacement growing
// linearly in time, F_0 = -sqrt(2) eta Omega r_0 cos(phi_0) t along F (and the
// sin(phi_0) quadrature along G; zero for the usual phi_0 in {0, pi}).
inline std::pair<double, double> trajectory(const DriveSpectrum& s, double t) {
    const auto k = detail::traj_scale(s);
    const double x = 2.0 * std::numbers::pi * s.xi0 * t;
    double F = 0.0, G = 0.0;
    for (const auto& tone : s.tones) {
        if (tone.harmonic == 0) {
            F += -k.lin * tone.amplitude * std::cos(tone.phase) * t;
            G += k.lin * tone.amplitude * std::sin(tone.phase) * t;
        } else {
            const double rn = tone.amplitude / tone.harmonic;
            const double arg = tone.harmonic * x + tone.phase;
            F += -k.c * rn * (std::sin(arg) - std::sin(tone.phase));
            G += k.c * rn * (std::cos(tone.phase) - std::cos(arg));
        }
    }
    return {F, G};
}

namespace detail {
inline double g_dot(const DriveSpectrum& s, const TrajScale& k, double t) {
    const double x = 2.0 * std::numbers::pi * s.xi0 * t;
    double gd = 0.0;
    for (const auto& tone : s.tones) {
        if (tone.harmonic == 0) {
            gd += k.lin * tone.amplitude * std::sin(tone.phase);
        } else {
            gd += k.lin * tone.amplitude * std::sin(tone.harmonic * x + tone.phase);
        }
    }
    return gd;
}
}  // namespace detail

// Geometric phase Phi(T) = -integral_0^T F dG, by adaptive quadrature.
// For pure integer-harmonic spectra this equals
//   2 pi (eta Omega / (2 pi xi0))^2 * sum r_n^2 / n
// which the test suite uses as the independent closed form.
inline double geometric_phase(const DriveSpectrum& s, double t_end, double rel_tol = 1e-9) {
    const auto k = detail::traj_scale(s);
    const double val = numeric::integrate(
        [&](double t) { return trajectory(s, t).first * detail::g_dot(s, k, t); }, 0.0, t_end,
        rel_tol, 1e-18, 128);
    return -val;
}

struct PhaseSpaceOutcome {
    double F = 0.0;
    double G = 0.0;
    double Phi = 0.0;
    std::vector<double> trace_t, trace_f, trace_g;  // optional sampled trajectory
};

inline PhaseSpaceOutcome evaluate_at_gate_time(const DriveSpectrum& s) {
    PhaseSpaceOutcome out;
    const double tg = s.gate_time();
    std::tie(out.F, out.G) = trajectory(s, tg);
    out.Phi = geometric_phase(s, tg);
    return out;
}

inline PhaseSpaceOutcome phase_space_trace(const DriveSpectrum& s, int n_samples) {
    if (n_samples < 2) throw InputError("trace needs at least 2 samples");
    PhaseSpaceOutcome out = evaluate_at_gate_time(s);
    const double tg = s.gate_time();
    out.trace_t.resize(static_cast<std::size_t>(n_samples));
    out.trace_f.resize(static_cast<std::size_t>(n_samples));
    out.trace_g.resize(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        const double t = (i == n_samples - 1) ? tg : tg * i / (n_samples - 1);
        const auto [f, g] = trajectory(s, t);
        out.trace_t[static_cast<std::size_t>(i)] = t;
        out.trace_f[static_cast<std::size_t>(i)] = f;
        out.trace_g[static_cast<std::size_t>(i)] = g;
    }
    // endpoint must equal trajectory(T_g) exactly
    out.trace_f.back() = out.F;
    out.trace_g.back() = out.G;
    return out;
}

// Bell-state fidelity for a thermal motional state with mean phonon number nbar.
inline double fidelity(double F, double G, double Phi, double nbar = 0.1) {
    const double d2 = F * F + G * G;
    const double a = nbar + 0.5;
    const double s = std::sin(Phi + 0.5 * F * G);
    return (3.0 + std::exp(-4.0 * a * d2)) / 8.0 + 0.5 * std::exp(-a * d2) * s * s;
}

inline double fidelity(const PhaseSpaceOutcome& out, double nbar = 0.1) {
    return fidelity(out.F, out.G, out.Phi, nbar);
}

struct FidelityEstimate {
    double value = 0.0;                  // blue/red average when both present
    double nbar = 0.1;
    std::optional<double> blue, red;             // per-sideband values
    std::optional<ToneReport> input_blue, input_red;  // the reports this estimate used
};

// Sign convention for the cubic-model IM products: the n = 0 product carries
// amplitude ~ r1^2 r2 < 0 (phase pi) and n = 3 carries ~ r2^2 r1 > 0.
// Overridable for sensitivity studies.
struct ImSignConvention {
    double n0 = -1.0;
    double n3 = +1.0;
};

namespace detail {
// Build the normalized four-tone spectrum from measured tone powers (dB, any
// common reference) and run the phase-space estimate.
inline double estimate_one_sideband(const ToneReport& report, double nbar, double xi0,
                                    double eta_ld, const ImSignConvention& signs) {
    if (!report.tones[1].valid || !report.tones[2].valid)
        throw InvalidGateTones("gate tones n = 1, 2 failed validation");
    std::array<double, 4> r{};
    for (std::size_t n = 0; n < 4; ++n)
        r[n] = std::sqrt(std::pow(10.0, report.tones[n].power_db / 10.0));
    // normalize to the n = 1 gate tone, then assign Cardioid signs
    const double r1 = r[1];
    if (!(r1 > 0.0)) throw InvalidGateTones("n = 1 gate tone has no power");
    for (auto& v : r) v /= r1;
    r[2] = -r[2];
    r[0] *= signs.n0;
    r[3] *= signs.n3;
    // renormalize the gate pair to sum r_n^2/n = 1
    const double s = 1.0 / std::sqrt(r[1] * r[1] + r[2] * r[2] / 2.0);
    DriveSpectrum spec;
    spec.xi0 = xi0;
    spec.eta_ld = eta_ld;
    for (int n = 0; n < 4; ++n) {
        const double rn = r[static_cast<std::size_t>(n)] * s;
        if (rn != 0.0) spec.tones.push_back({n, rn, 0.0});
    }
    calibrate_omega(spec);
    return fidelity(evaluate_at_gate_time(spec), nbar);
}
}  // namespace detail

inline FidelityEstimate estimate_from_tones(const ToneReport& report, double nbar = 0.1,
                                            double xi0 = 1e3, double eta_ld = 0.026,
                                            const ImSignConvention& signs = {}) {
    FidelityEstimate est;
    est.nbar = nbar;
    est.value = detail::estimate_one_sideband(report, nbar, xi0, eta_ld, signs);
    (report.sideband == Sideband::blue ? est.blue : est.red) = est.value;
    (report.sideband == Sideband::blue ? est.input_blue : est.input_red) = report;
    return est;
}

// Blue/red pooled estimate; the average is arithmetic on the fidelity.
inline FidelityEstimate estimate_from_tones(const ToneReport& blue, const ToneReport& red,
                                            double nbar = 0.1, double xi0 = 1e3,
                                            double eta_ld = 0.026, const ImSignConvention& signs = {}) {
    FidelityEstimate est;
    est.nbar = nbar;
    est.blue = detail::estimate_one_sideband(blue, nbar, xi0, eta_ld, signs);
    est.red = detail::estimate_one_sideband(red, nbar, xi0, eta_ld, signs);
    est.value = 0.5 * (*est.blue + *est.red);
    est.input_blue = blue;
    est.input_red = red;
    return est;
}

// Infidelity of the ideal Cardioid with one spurious tone at index im_n whose
// power sits ratio_db below the single-gate-tone power r1^2.
inline double im_infidelity(int im_n, double ratio_db, double nbar = 0.1,
                            const ImSignConvention& signs = {}) {
    DriveSpectrum spec = DriveSpectrum::ideal_cardioid();
    const double r1 = spec.tones[0].amplitude;
    const double sign = (im_n == 0) ? signs.n0 : signs.n3;
    const double r_im = sign * std::sqrt(r1 * r1 * std::pow(10.0, -ratio_db / 10.0));
    spec.tones.push_back({im_n, r_im, 0.0});
    calibrate_omega(spec);
    return 1.0 - fidelity(evaluate_at_gate_time(spec), nbar);
}

struct ImThresholdRow {
    double target_infidelity;
    double n0_db;
    double n3_db;
};

// Required P_gate/P_IM (dB) at each target infidelity for the n = 0 and n = 3
// products, by bisection. Infidelity is checked to decrease monotonically in
// the ratio across the search bracket before inverting.
inline std::vector<ImThresholdRow> im_threshold_table(
    const std::vector<double>& targets = {1e-2, 1e-3, 1e-4}, double nbar = 0.1,
    double lo_db = -5.0, double hi_db = 90.0) {
    std::vector<ImThresholdRow> rows;
    for (double target : targets) {
        ImThresholdRow row{target, 0.0, 0.0};
        for (int im_n : {0, 3}) {
            double prev = im_infidelity(im_n, lo_db, nbar);
            for (int i = 1; i <= 8; ++i) {
                const double rdb = lo_db + (hi_db - lo_db) * i / 8.0;
                const double cur = im_infidelity(im_n, rdb, nbar);
                if (cur > prev * (1.0 + 1e-12))
                    throw Error("im_threshold_table: infidelity not monotone over the bracket");
                prev = cur;
            }
            const double r = numeric::brent_root(
                [&](double rdb) { return im_infidelity(im_n, rdb, nbar) - target; }, lo_db, hi_db, 1e-6);
            (im_n == 0 ? row.n0_db : row.n3_db) = r;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace aomdpd
