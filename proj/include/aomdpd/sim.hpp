#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "aomdpd/analysis.hpp"
#include "aomdpd/aom.hpp"
#include "aomdpd/phase_space.hpp"
#include "aomdpd/spectral.hpp"
#include "aomdpd/transfer.hpp"
#include "aomdpd/waveform.hpp"

namespace aomdpd {

// One full pipeline configuration: synth -> (predistort) -> forward ->
// heterodyne -> periodogram -> tones -> fidelity estimate.
struct SimConfig {
    double nu = 1.84e6;
    double xi0 = 20e3;
    double sample_rate = 125e6;
    int n_periods = 40;          // 40 periods at 20 kHz = 2 ms, df = 500 Hz
    double f_det = 20e6;
    double reference_amplitude = 1.0;
    double noise_rms = 0.0;
    std::uint64_t seed = 0;
    bool use_phase_model = true;
    double eta_ref = 0.80;
    double nbar = 0.1;
    double eta_ld = 0.026;
};

struct SweepPoint {
    double drive_amplitude = 0.0;
    bool dpd = false;
    ToneReport blue, red;
    double r10_db = 0.0;
    double r23_db = 0.0;
    double eta_bar = 0.0;
    double fidelity_est = 0.0;
    double p1_abs = 0.0;  // absolute blue-sideband gate-tone power (rate mapping)
};

inline SweepPoint simulate_point(const SimConfig& cfg, const PolynomialTransfer& amp,
                                 const PolynomialTransfer* phase, const PredistortionMap& map,
                                 double drive, bool dpd, std::uint64_t noise_stream = 0) {
    GateSpec spec = GateSpec::cardioid(cfg.nu, cfg.xi0, drive);
    IQWaveform w = synth_cardioid(spec, cfg.sample_rate, cfg.n_periods);
    if (dpd) w = predistort(w, map);
    const OpticalWaveform opt = forward(w, amp, cfg.use_phase_model ? phase : nullptr);
    const BeatRecord beat =
        heterodyne_mix(opt, cfg.f_det, cfg.reference_amplitude, cfg.noise_rms,
                       cfg.seed ^ (0x9e3779b97f4a7c15ull * (noise_stream + 1)));
    const Psd psd = periodogram(beat);

    SweepPoint pt;
    pt.drive_amplitude = drive;
    pt.dpd = dpd;
    pt.blue = extract_tones(psd, spec, cfg.f_det, Sideband::blue);
    pt.red = extract_tones(psd, spec, cfg.f_det, Sideband::red);
    const PowerRatios ratios = power_ratios(pt.blue, pt.red);
    pt.r10_db = ratios.r10_db;
    pt.r23_db = ratios.r23_db;
    pt.eta_bar = eta_bar(w, amp, cfg.eta_ref);
    pt.fidelity_est = estimate_from_tones(pt.blue, pt.red, cfg.nbar, cfg.xi0, cfg.eta_ld).value;
    pt.p1_abs = pt.blue.tones[1].power;
    return pt;
}

// Sweep over the drive grid, DPD off and on per point. Points run on a small
// worker pool; results land in grid order so downstream output is
// deterministic regardless of scheduling.
inline std::vector<SweepPoint> run_sweep(const SimConfig& cfg, const PolynomialTransfer& amp,
                                         const PolynomialTransfer* phase, const PredistortionMap& map,
                                         const std::vector<double>& drive_grid) {
    struct Job {
        double drive;
        bool dpd;
    };
    std::vector<Job> jobs;
    for (double a : drive_grid) {
        jobs.push_back({a, false});
        jobs.push_back({a, true});
    }
    std::vector<SweepPoint> out(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                out[i] = simulate_point(cfg, amp, phase, map, jobs[i].drive, jobs[i].dpd,
                                        static_cast<std::uint64_t>(i));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    for (unsigned t = 0; t + 1 < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

}  // namespace aomdpd
