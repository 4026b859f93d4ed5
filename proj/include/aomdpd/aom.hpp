#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "aomdpd/errors.hpp"
#include "aomdpd/numeric.hpp"
#include "aomdpd/transfer.hpp"
#include "aomdpd/waveform.hpp"

namespace aomdpd {

// Optical field-amplitude envelope, |y| proportional to sqrt(P_opt).
struct OpticalWaveform {
    double sample_rate = 1e9;
    std::vector<std::complex<double>> samples;
    GateSpec spec;
    bool dpd_applied = false;
    bool phase_model_applied = false;
};

// Memoryless AOM model: y = f_AM(|x|) * exp(i*(arg x + f_PM(|x|))), |x| clipped
// to 1. With no phase model f_PM is identically zero.
inline OpticalWaveform forward(const IQWaveform& w, const PolynomialTransfer& amp,
                               const PolynomialTransfer* phase = nullptr) {
    if (amp.kind() != ResponseKind::amplitude) throw KindMismatch("forward: amp must be an amplitude response");
    if (phase && phase->kind() != ResponseKind::phase) throw KindMismatch("forward: phase must be a phase response");
    OpticalWaveform out;
    out.sample_rate = w.sample_rate;
    out.spec = w.spec;
    out.dpd_applied = w.dpd_applied;
    out.phase_model_applied = phase != nullptr;
    out.samples.resize(w.samples.size());
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const std::complex<double> x = w.samples[i];
        const double mag = std::min(std::abs(x), 1.0);
        const double y = amp.eval_raw(mag);
        if (mag == 0.0) {
            out.samples[i] = {0.0, 0.0};
            continue;
        }
        double theta = std::arg(x);
        if (phase) theta += phase->eval_raw(mag);
        out.samples[i] = std::polar(y, theta);
    }
    return out;
}

// Instantaneous first-order diffraction efficiency eta = eta_ref * f(A)^2 / f(1)^2.
inline double eta_instant(double drive, const PolynomialTransfer& amp, double eta_ref = 0.80) {
    if (amp.kind() != ResponseKind::amplitude) throw KindMismatch("eta_instant needs an amplitude response");
    const double y = amp.evaluate(drive);
    const double y1 = amp.eval_raw(1.0);
    return eta_ref * (y * y) / (y1 * y1);
}

// Time-averaged diffraction efficiency of a gate waveform (post-DPD samples if
// predistortion is enabled): eta_ref * mean |f_AM(w_i)|^2 / f_AM(1)^2.
inline double eta_bar(const IQWaveform& w, const PolynomialTransfer& amp, double eta_ref = 0.80) {
    if (amp.kind() != ResponseKind::amplitude) throw KindMismatch("eta_bar needs an amplitude response");
    if (w.samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : w.samples) {
        const double y = amp.eval_raw(std::min(std::abs(s), 1.0));
        acc += y * y;
    }
    const double y1 = amp.eval_raw(1.0);
    return eta_ref * (acc / static_cast<double>(w.samples.size())) / (y1 * y1);
}

// eta_bar tabulated on a dense drive-amplitude grid with spline interpolation.
// The cubic spline is checked for monotonicity on a fine grid; if it
// overshoots anywhere the curve falls back to monotone piecewise-cubic.
class EfficiencyCurve {
public:
    EfficiencyCurve() = default;
    EfficiencyCurve(std::vector<double> a, std::vector<double> nodpd, std::vector<double> dpd)
        : a_(std::move(a)), nodpd_(std::move(nodpd)), dpd_(std::move(dpd)) {
        build(nodpd_, spline_nodpd_, pchip_nodpd_, use_pchip_nodpd_);
        build(dpd_, spline_dpd_, pchip_dpd_, use_pchip_dpd_);
    }

    double eta(double drive, bool dpd) const {
        if (dpd) return use_pchip_dpd_ ? pchip_dpd_(drive) : spline_dpd_(drive);
        return use_pchip_nodpd_ ? pchip_nodpd_(drive) : spline_nodpd_(drive);
    }

    const std::vector<double>& grid() const { return a_; }
    const std::vector<double>& values_nodpd() const { return nodpd_; }
    const std::vector<double>& values_dpd() const { return dpd_; }

private:
    void build(const std::vector<double>& y, numeric::CubicSpline& spline,
               numeric::MonotoneCubic& pchip, bool& use_pchip) {
        spline = numeric::CubicSpline(a_, y);
        use_pchip = false;
        const int fine = 2048;
        double prev = spline(a_.front());
        for (int i = 1; i <= fine; ++i) {
            const double x = a_.front() + (a_.back() - a_.front()) * i / fine;
            const double v = spline(x);
            if (v < prev - 1e-12) {
                use_pchip = true;
                break;
            }
            prev = v;
        }
        if (use_pchip) pchip = numeric::MonotoneCubic(a_, y);
    }

    std::vector<double> a_, nodpd_, dpd_;
    numeric::CubicSpline spline_nodpd_, spline_dpd_;
    numeric::MonotoneCubic pchip_nodpd_, pchip_dpd_;
    bool use_pchip_nodpd_ = false, use_pchip_dpd_ = false;
};

struct EtaGridParams {
    double nu = 1.84e6;
    double xi0 = 20e3;
    double sample_rate = 125e6;
    int n_periods = 1;
    int grid_points = 100;
    double eta_ref = 0.80;
};

inline EfficiencyCurve eta_bar_grid(const PolynomialTransfer& amp, const PredistortionMap& map,
                                    const EtaGridParams& params = {}) {
    std::vector<double> a(static_cast<std::size_t>(params.grid_points));
    std::vector<double> off(a.size()), on(a.size());
    const GateSpec unit = GateSpec::cardioid(params.nu, params.xi0, 1.0);
    const IQWaveform base = synth_cardioid(unit, params.sample_rate, params.n_periods);
    for (int i = 0; i < params.grid_points; ++i) {
        const double drive = static_cast<double>(i) / (params.grid_points - 1);
        a[static_cast<std::size_t>(i)] = drive;
        IQWaveform w = base;
        for (auto& s : w.samples) s *= drive;
        w.spec.drive_amplitude = drive;
        off[static_cast<std::size_t>(i)] = eta_bar(w, amp, params.eta_ref);
        on[static_cast<std::size_t>(i)] =
            (drive == 0.0) ? 0.0 : eta_bar(predistort(w, map), amp, params.eta_ref);
    }
    return EfficiencyCurve(std::move(a), std::move(off), std::move(on));
}

}  // namespace aomdpd
