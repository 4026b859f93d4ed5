#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "aomdpd/errors.hpp"
#include "aomdpd/transfer.hpp"

namespace aomdpd {

struct Tone {
    int harmonic = 1;        // detuning index n: tone sits at +-(nu + n*xi0)
    double amplitude = 1.0;  // signed relative amplitude r_n
    double phase = 0.0;      // rad
};

// Multi-tone gate definition in the carrier rotating frame.
struct GateSpec {
    double nu = 1.84e6;   // motional-mode frequency, Hz
    double xi0 = 20e3;    // gate detuning, Hz; gate period T_g = 1/xi0
    std::vector<Tone> tones;
    double drive_amplitude = 1.0;  // normalized peak A in [0, 1]
    bool dpd = false;

    // Cardioid(1,2): equal-magnitude tones at n = 1, 2 with a relative pi
    // phase encoded as the sign of r_2.
    static GateSpec cardioid(double nu, double xi0, double amplitude) {
        GateSpec s;
        s.nu = nu;
        s.xi0 = xi0;
        s.drive_amplitude = amplitude;
        s.tones = {{1, +1.0, 0.0}, {2, -1.0, 0.0}};
        s.validate();
        return s;
    }

    double gate_period() const { return 1.0 / xi0; }
    int max_harmonic() const {
        int m = 0;
        for (const auto& t : tones) m = std::max(m, t.harmonic);
        return m;
    }

    void validate() const {
        if (!(xi0 > 0.0)) throw InputError("xi0 must be positive");
        if (!(nu > xi0)) throw InputError("nu must exceed xi0");
        if (drive_amplitude < 0.0 || drive_amplitude > 1.0)
            throw InputError("drive amplitude must lie in [0, 1]");
        if (tones.empty()) throw InputError("gate spec needs at least one tone");
        for (const auto& t : tones)
            if (t.harmonic < 1) throw InputError("gate tone harmonics must be positive integers");
    }
};

// Sampled complex envelope I + iQ. The symmetric double-sideband construction
// keeps Q identically zero; the flag records whether predistortion ran.
struct IQWaveform {
    double sample_rate = 1e9;
    std::vector<std::complex<double>> samples;
    GateSpec spec;
    bool dpd_applied = false;

    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

    double peak() const {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, std::abs(s));
        return m;
    }

    // Real-envelope test: max |Q| < 1e-12 * max |I|.
    bool is_real() const {
        double mi = 0.0, mq = 0.0;
        for (const auto& s : samples) {
            mi = std::max(mi, std::abs(s.real()));
            mq = std::max(mq, std::abs(s.imag()));
        }
        return mq < 1e-12 * mi || (mi == 0.0 && mq == 0.0);
    }
};

inline IQWaveform normalize_peak(const IQWaveform& w, double target) {
    const double p = w.peak();
    if (!(p > 0.0)) throw InputError("cannot normalize an all-zero waveform");
    IQWaveform out = w;
    const double scale = target / p;
    for (auto& s : out.samples) s *= scale;
    out.spec.drive_amplitude = target;
    return out;
}

// Sample the double-sideband sum over tones at +-(nu + n*xi0). An integer
// number of gate periods puts every tone exactly on an FFT bin.
inline IQWaveform synth_cardioid(const GateSpec& spec, double sample_rate, int n_periods) {
    spec.validate();
    if (n_periods < 1) throw InputError("need at least one gate period");
    const double f_max = spec.nu + spec.max_harmonic() * spec.xi0;
    if (!(sample_rate > 4.0 * f_max))
        throw UndersampledSpec("sample rate must exceed 4*(nu + n_max*xi0)");

    IQWaveform w;
    w.sample_rate = sample_rate;
    w.spec = spec;
    const auto n_samples = static_cast<std::size_t>(std::llround(sample_rate * n_periods / spec.xi0));
    w.samples.resize(n_samples);
    const double dt = 1.0 / sample_rate;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) * dt;
        double v = 0.0;
        for (const auto& tone : spec.tones) {
            const double f = spec.nu + tone.harmonic * spec.xi0;
            // +f with phase phi and -f with phase -phi: a real record
            v += 2.0 * tone.amplitude * std::cos(2.0 * std::numbers::pi * f * t + tone.phase);
        }
        w.samples[i] = {v, 0.0};
    }
    return normalize_peak(w, spec.drive_amplitude);
}

// Sample-wise amplitude predistortion: s -> sign(s) * g(|s|). Defined for the
// real-envelope case only; complex-envelope DPD is out of scope.
inline IQWaveform predistort(const IQWaveform& w, const PredistortionMap& map) {
    if (!w.is_real())
        throw ComplexEnvelopeUnsupported("amplitude-only DPD requires a real envelope (Q = 0)");
    if (w.peak() > 1.0 + 1e-12) throw InputError("waveform peak exceeds full drive");
    IQWaveform out = w;
    for (auto& s : out.samples) {
        const double v = s.real();
        const double g = map(std::abs(v));
        s = {v < 0.0 ? -g : g, 0.0};
    }
    out.dpd_applied = true;
    out.spec.dpd = true;
    return out;
}

}  // namespace aomdpd
