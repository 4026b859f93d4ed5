// Acceptance suite: runs every top-level criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero if any criterion
// fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aomdpd/analysis.hpp"
#include "aomdpd/aom.hpp"
#include "aomdpd/io.hpp"
#include "aomdpd/phase_space.hpp"
#include "aomdpd/sim.hpp"
#include "aomdpd/spectral.hpp"
#include "aomdpd/transfer.hpp"
#include "aomdpd/waveform.hpp"

using namespace aomdpd;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number;
    std::string name;
    bool passed = true;
    std::string detail;
    double seconds = 0.0;
};

std::vector<Criterion> g_results;

void run_criterion(int number, const std::string& name, const std::function<void(Criterion&)>& body,
                   double max_seconds = 0.0) {
    Criterion c{number, name, true, {}, 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.passed = false;
        c.detail += std::string(" exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (max_seconds > 0.0 && c.seconds > max_seconds) {
        c.passed = false;
        c.detail += " [runtime over budget]";
    }
    std::printf("[%s] criterion %2d: %s (%.2fs)%s\n", c.passed ? "PASS" : "FAIL", number,
                name.c_str(), c.seconds, c.detail.empty() ? "" : ("  --" + c.detail).c_str());
    std::fflush(stdout);
    g_results.push_back(c);
}

void check(Criterion& c, bool ok, const std::string& what) {
    if (!ok) {
        c.passed = false;
        c.detail += " [" + what + "]";
    }
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

int main() {
    const auto& ref = reference_model();
    PredistortionMap ref_map = invert(ref.amplitude);
    ref_map.build_cache();

    // 1. Published IM-suppression table at +-0.3 dB, nbar = 0.1, under 10 s.
    run_criterion(1, "IM suppression thresholds match the published table", [&](Criterion& c) {
        const auto rows = im_threshold_table({1e-2, 1e-3, 1e-4}, 0.1);
        const double want_n0[] = {30.2, 40.3, 50.3};
        const double want_n3[] = {10.8, 20.5, 30.5};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            check(c, std::abs(rows[i].n0_db - want_n0[i]) <= 0.3,
                  "n0@" + fmt_num(rows[i].target_infidelity) + " computed " + fmt_num(rows[i].n0_db) +
                      " dB vs " + fmt_num(want_n0[i]));
            check(c, std::abs(rows[i].n3_db - want_n3[i]) <= 0.3,
                  "n3@" + fmt_num(rows[i].target_infidelity) + " computed " + fmt_num(rows[i].n3_db) +
                      " dB vs " + fmt_num(want_n3[i]));
            const double asym = rows[i].n0_db - rows[i].n3_db;
            check(c, asym >= 19.0 && asym <= 21.0,
                  "n0-n3 asymmetry " + fmt_num(asym) + " dB outside [19, 21]");
        }
    }, 10.0);

    // 2. Phase-space endpoints for single IM tones, under 1 s.
    run_criterion(2, "IM-tone phase-space endpoints", [&](Criterion& c) {
        auto s0 = DriveSpectrum::ideal_cardioid();
        s0.tones.push_back({0, 0.1, 0.0});
        calibrate_omega(s0);
        const auto [f0, g0] = trajectory(s0, s0.gate_time());
        check(c, std::abs(f0 - (-0.444)) <= 0.005, "F(Tg) = " + fmt_num(f0) + " vs -0.444");

        auto s3 = DriveSpectrum::ideal_cardioid();
        s3.tones.push_back({3, 0.1, 0.0});
        calibrate_omega(s3);
        const auto [f3, g3] = trajectory(s3, s3.gate_time());
        check(c, std::abs(f3) < 1e-9 && std::abs(g3) < 1e-9,
              "n=3 endpoint (" + fmt_num(f3) + ", " + fmt_num(g3) + ") not closed");
    }, 1.0);

    // 3. Ideal-gate identities.
    run_criterion(3, "ideal-gate identities", [&](Criterion& c) {
        auto s = DriveSpectrum::ideal_cardioid(1e3, 0.026);
        const double omega = calibrate_omega(s);
        const double expected_omega = std::numbers::pi * 1e3 / 0.026;
        check(c, std::abs(omega - expected_omega) <= 1e-12 * expected_omega,
              "Omega calibration " + fmt_num(omega));
        const double phi = geometric_phase(s, s.gate_time());
        check(c, std::abs(phi - std::numbers::pi / 2) <= 1e-6, "Phi = " + fmt_num(phi));
        const auto out = evaluate_at_gate_time(s);
        const double fid = fidelity(out, 0.1);
        check(c, std::abs(fid - 1.0) <= 1e-9, "fidelity " + fmt_num(fid));
    });

    // 4. Round-trip linearization, standalone and end-to-end.
    run_criterion(4, "predistortion round-trip linearity", [&](Criterion& c) {
        double worst = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double u = ref_map.a_corr() * i / 2000.0;
            worst = std::max(worst, std::abs(ref.amplitude.eval_raw(ref_map(u)) - u));
        }
        check(c, worst <= 1e-6, "map round-trip error " + fmt_num(worst));

        const auto w = synth_cardioid(GateSpec::cardioid(1.84e6, 20e3, 0.5), 125e6, 2);
        const auto out = forward(predistort(w, ref_map), ref.amplitude);
        double worst_env = 0.0;
        for (std::size_t i = 0; i < w.samples.size(); ++i)
            worst_env = std::max(worst_env, std::abs(out.samples[i].real() - w.samples[i].real()));
        check(c, worst_env <= 1e-6, "end-to-end envelope error " + fmt_num(worst_env));
    });

    // 5. DPD spectral advantage inside the correctable range, collapse outside.
    SimConfig cfg;  // defaults: 125 MHz, 40 periods, f_det 20 MHz, amp+phase model
    std::vector<SweepPoint> sweep_points;
    run_criterion(5, "R10 advantage inside the correctable range", [&](Criterion& c) {
        std::vector<double> grid;
        for (double a = 0.30; a < ref_map.a_corr(); a += 0.025) grid.push_back(a);
        grid.push_back(ref_map.a_corr());
        grid.push_back(0.95);
        const auto pts = run_sweep(cfg, ref.amplitude, &ref.phase, ref_map, grid);
        sweep_points = pts;
        for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
            const double a = pts[i].drive_amplitude;
            const double adv = pts[i + 1].r10_db - pts[i].r10_db;
            if (a <= ref_map.a_corr() + 1e-12)
                check(c, adv > 0.0, "advantage " + fmt_num(adv) + " dB at A = " + fmt_num(a));
            if (std::abs(a - 0.95) < 1e-9)
                check(c, adv < 1.0, "advantage " + fmt_num(adv) + " dB has not collapsed at A = 0.95");
        }
    });

    // 6. Two-tone IM3 closed form recovered through the periodogram.
    run_criterion(6, "two-tone IM3 oracle via flat-top periodogram", [&](Criterion& c) {
        // flat-top amplitude accuracy on off-bin sinusoids
        for (double frac : {0.0, 0.25, 0.5}) {
            BeatRecord rec;
            rec.sample_rate = 1e6;
            rec.spec = GateSpec::cardioid(1.84e6, 20e3, 1.0);
            const std::size_t n = 4000;
            rec.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                rec.samples[i] = std::cos(2.0 * std::numbers::pi * (200.0 + frac) *
                                          static_cast<double>(i) / static_cast<double>(n));
            const auto psd = periodogram(rec);
            double peak = 0.0;
            for (double p : psd.power) peak = std::max(peak, p);
            const double err_db = std::abs(10.0 * std::log10(peak / 0.5));
            check(c, err_db <= 0.05, "flat-top error " + fmt_num(err_db) + " dB at offset " + fmt_num(frac));
        }

        // IM3 amplitude through the cubic model
        auto cubic = PolynomialTransfer({1.0, 0.0, -0.2}, ResponseKind::amplitude);
        const double a = 0.3, fs = 125e6, nu = 1.84e6, xi0 = 20e3;
        IQWaveform w;
        w.sample_rate = fs;
        w.spec = GateSpec::cardioid(nu, xi0, 2 * a);
        const auto n = static_cast<std::size_t>(std::llround(fs * 40 / xi0));
        w.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / fs;
            w.samples[i] = {a * std::cos(2 * std::numbers::pi * (nu + xi0) * t) +
                                a * std::cos(2 * std::numbers::pi * (nu + 2 * xi0) * t),
                            0.0};
        }
        // periodogram the real optical record directly: an on-bin tone of
        // amplitude c reads power c^2/2
        const auto opt = forward(w, cubic);
        BeatRecord rec;
        rec.sample_rate = opt.sample_rate;
        rec.spec = opt.spec;
        rec.samples.reserve(opt.samples.size());
        for (const auto& s : opt.samples) rec.samples.push_back(s.real());
        const auto psd = periodogram(rec);
        const auto power_at = [&](double f) {
            return psd.power[static_cast<std::size_t>(std::llround(f / psd.df))];
        };
        const double amp_expected = 0.75 * 0.2 * a * a * a;
        for (double f : {2 * (nu + xi0) - (nu + 2 * xi0), 2 * (nu + 2 * xi0) - (nu + xi0)}) {
            const double amp_measured = std::sqrt(2.0 * power_at(f));
            check(c, std::abs(amp_measured / amp_expected - 1.0) <= 0.01,
                  "IM3 amplitude off by " + fmt_num(100.0 * (amp_measured / amp_expected - 1.0)) + "%");
        }
    });

    // 7. Threshold efficiencies improve under DPD at every budget.
    run_criterion(7, "threshold-efficiency gain from DPD", [&](Criterion& c) {
        std::vector<double> grid;
        for (double a = 0.05; a <= 0.951; a += 0.05) grid.push_back(a);
        const auto pts = run_sweep(cfg, ref.amplitude, &ref.phase, ref_map, grid);
        std::vector<EfficiencyPoint> off, on;
        for (const auto& p : pts)
            (p.dpd ? on : off).push_back({p.eta_bar, 1.0 - p.fidelity_est});
        for (double budget : {1e-2, 1e-3, 1e-4}) {
            const double t_off = threshold_efficiency(off, std::vector<double>{budget})[0];
            const double t_on = threshold_efficiency(on, std::vector<double>{budget})[0];
            check(c, t_on / t_off > 1.0,
                  "ratio " + fmt_num(t_on / t_off) + " at budget " + fmt_num(budget));
        }
        // eta_bar at the correctable amplitude: DPD reshapes the envelope upward
        const auto w_corr = synth_cardioid(GateSpec::cardioid(cfg.nu, cfg.xi0, ref_map.a_corr()),
                                           cfg.sample_rate, 1);
        const double eta_off = eta_bar(w_corr, ref.amplitude);
        const double eta_on = eta_bar(predistort(w_corr, ref_map), ref.amplitude);
        check(c, eta_on > eta_off, "eta_corr dpd " + fmt_num(eta_on) + " <= nodpd " + fmt_num(eta_off));
    });

    // 8. Parity MLE battery: bias, error consistency, noiseless exactness. < 30 s.
    run_criterion(8, "parity MLE recovery at the published contrast", [&](Criterion& c) {
        const double truth = 0.958;
        std::mt19937_64 rng(0xA0DD);
        std::vector<double> estimates, sigmas;
        for (int scan_i = 0; scan_i < 200; ++scan_i) {
            ParityScan scan;
            scan.setting = {0.6, true};
            for (int i = 0; i < 16; ++i) {
                const double phi = 2.0 * std::numbers::pi * i / 16;
                const double p = 0.5 * (1.0 + truth * std::cos(2.0 * phi + 0.25));
                std::binomial_distribution<long> bin(625, p);
                scan.points.push_back({phi, static_cast<double>(bin(rng)), 625.0});
            }
            const auto fit = parity_mle(scan);
            estimates.push_back(std::abs(fit.contrast));
            if (fit.hessian_ok) sigmas.push_back(fit.sigma_contrast);
        }
        const double mean_est = numeric::mean(estimates);
        const double bias = std::abs(mean_est - truth);
        check(c, bias < 1e-3, "empirical bias " + fmt_num(bias));
        const double scatter = numeric::sample_stddev(estimates);
        const double mean_sigma = numeric::mean(sigmas);
        check(c, sigmas.size() == estimates.size(), "Hessian failed on some scans");
        check(c, std::abs(mean_sigma / scatter - 1.0) <= 0.20,
              "sigma-hat/scatter = " + fmt_num(mean_sigma / scatter));

        // noiseless scans recover the generators to 1e-6
        ParityScan clean;
        clean.setting = {0.6, true};
        for (int i = 0; i < 16; ++i) {
            const double phi = 2.0 * std::numbers::pi * i / 16;
            clean.points.push_back({phi, 625.0 * 0.5 * (1.0 + 0.89 * std::cos(2.0 * phi + 0.3)), 625.0});
        }
        const auto fit = parity_mle(clean);
        check(c, std::abs(fit.contrast - 0.89) < 1e-6,
              "noiseless contrast error " + fmt_num(std::abs(fit.contrast - 0.89)));
        check(c, std::abs(fit.phase0 - 0.3) < 1e-6, "noiseless phase error");
    }, 30.0);

    // 9. Axis-fit recovery at the published parameters over 100 seeded trials.
    run_criterion(9, "two-parameter axis-fit recovery", [&](Criterion& c) {
        const double alpha_true = 3.42, delta_true = -0.018;
        std::vector<double> alpha_err, delta_err, fitted_sig_a, fitted_sig_d;
        for (int trial = 0; trial < 100; ++trial) {
            std::mt19937_64 rng(500 + static_cast<unsigned>(trial));
            std::vector<GatePoint> gate;
            std::vector<PdCurvePoint> pd;
            // noise sized so the fitted uncertainties match the published ones
            const double sig_h = 0.24, sig_v = 0.0085;
            std::normal_distribution<double> nh(0.0, sig_h), nv(0.0, sig_v);
            for (int i = 0; i < 8; ++i) {
                const Setting s{0.4 + 0.05 * i, i % 2 == 1};
                const double r = 1.0 + 0.15 * i;
                const double fpd = 0.99 - 0.004 * i;
                pd.push_back({s, r, fpd});
                GatePoint gp;
                gp.setting = s;
                gp.xi0_khz = alpha_true * r + nh(rng);
                gp.sigma_xi0_khz = sig_h;
                gp.fidelity = fpd + delta_true + nv(rng);
                gp.sigma_fidelity = sig_v;
                gate.push_back(gp);
            }
            const auto fit = fit_axes(gate, pd, 0.0);
            alpha_err.push_back(fit.alpha_khz - alpha_true);
            delta_err.push_back(fit.delta - delta_true);
            fitted_sig_a.push_back(fit.sigma_alpha);
            fitted_sig_d.push_back(fit.sigma_delta);
        }
        double rms_a = 0.0, rms_d = 0.0;
        for (double e : alpha_err) rms_a += e * e;
        for (double e : delta_err) rms_d += e * e;
        rms_a = std::sqrt(rms_a / 100.0);
        rms_d = std::sqrt(rms_d / 100.0);
        check(c, rms_a <= 0.12, "alpha RMS error " + fmt_num(rms_a) + " kHz");
        check(c, rms_d <= 0.006, "delta RMS error " + fmt_num(rms_d));
        check(c, numeric::mean(fitted_sig_a) <= 0.12,
              "fitted sigma_alpha " + fmt_num(numeric::mean(fitted_sig_a)));
        check(c, numeric::mean(fitted_sig_d) <= 0.006,
              "fitted sigma_delta " + fmt_num(numeric::mean(fitted_sig_d)));
    });

    // 10. Rate-uncertainty constant.
    run_criterion(10, "fractional rate uncertainty at 0.2 dB", [&](Criterion& c) {
        const double v = rate_uncertainty(0.2);
        check(c, std::abs(v - 0.02303) <= 1e-5, "value " + fmt_num(v));
    });

    // 11. Sweep determinism through the CLI, byte-identical reruns.
    run_criterion(11, "seeded sweep reruns are byte-identical", [&](Criterion& c) {
        const auto dir = fs::temp_directory_path() / "aomdpd_acceptance_sweep";
        fs::create_directories(dir / "run1");
        fs::create_directories(dir / "run2");
        const std::string args =
            "sweep --reference-model --a-min 0.4 --a-max 0.5 --a-steps 2 --periods 40 "
            "--sample-rate 125e6 --noise-rms 1e-6 --seed 777";
        for (const char* run : {"run1", "run2"}) {
            const std::string cmd = std::string("AOMDPD_OUTPUT_DIR=") + (dir / run).string() + " " +
                                    AOMDPD_CLI_PATH + " " + args + " >/dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            check(c, WEXITSTATUS(status) == 0, "sweep run failed");
        }
        for (const char* f : {"spectral_sweep.csv", "fidelity_vs_eta.csv", "thresholds.csv",
                              "eta_thresholds.csv", "efficiency_curve.csv"}) {
            std::ifstream a(dir / "run1" / f), b(dir / "run2" / f);
            std::stringstream sa, sb;
            sa << a.rdbuf();
            sb << b.rdbuf();
            check(c, !sa.str().empty() && sa.str() == sb.str(),
                  std::string(f) + " differs between reruns");
        }
    });

    int failures = 0;
    for (const auto& r : g_results)
        if (!r.passed) ++failures;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
                g_results.size());
    return failures == 0 ? 0 : 1;
}
