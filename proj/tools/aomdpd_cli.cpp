// Command-line front end for the AOM predistortion toolkit: calibration
// fitting, waveform synthesis, forward simulation, spectral reports, fidelity
// estimation, experiment analysis, and CSV reproductions of the benchmark
// sweeps. Exit codes: 0 success, 2 input error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "aomdpd/analysis.hpp"
#include "aomdpd/aom.hpp"
#include "aomdpd/errors.hpp"
#include "aomdpd/io.hpp"
#include "aomdpd/phase_space.hpp"
#include "aomdpd/sim.hpp"
#include "aomdpd/spectral.hpp"
#include "aomdpd/transfer.hpp"
#include "aomdpd/waveform.hpp"

namespace {

using namespace aomdpd;
using nlohmann::json;

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string output_path(const std::string& name) {
    if (const char* dir = std::getenv("AOMDPD_OUTPUT_DIR"); dir && *dir)
        return (fs::path(dir) / name).string();
    return name;
}

struct ModelOptions {
    std::string amp_path, phase_path;
    bool use_reference = false;

    void attach(CLI::App* cmd, bool need_phase = true) {
        cmd->add_flag("--reference-model", use_reference, "use the built-in synthetic AOM model");
        cmd->add_option("--amp-model", amp_path, "fitted amplitude model JSON");
        if (need_phase) cmd->add_option("--phase-model", phase_path, "fitted phase model JSON");
    }

    PolynomialTransfer amplitude() const {
        if (use_reference) return reference_model().amplitude;
        if (amp_path.empty()) throw InputError("need --amp-model or --reference-model");
        return io::transfer_from_json(io::load_json(amp_path));
    }

    std::optional<PolynomialTransfer> phase() const {
        if (use_reference) return reference_model().phase;
        if (phase_path.empty()) return std::nullopt;
        return io::transfer_from_json(io::load_json(phase_path));
    }
};

struct GateOptions {
    double nu = 1.84e6;
    double xi0 = 20e3;
    double amplitude = 0.4;
    double sample_rate = 1e9;  // mirrors the acquisition chain; configurable
    int periods = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--nu", nu, "motional-mode frequency, Hz");
        cmd->add_option("--xi0", xi0, "gate detuning, Hz");
        cmd->add_option("--amplitude,-A", amplitude, "normalized drive amplitude in [0, 1]");
        cmd->add_option("--sample-rate", sample_rate, "waveform sample rate, Hz");
        cmd->add_option("--periods", periods, "record length in gate periods");
    }
};

void apply_config_file(const std::string& path, SimConfig& cfg, GateOptions& gate) {
    const json j = io::load_json(path);
    gate.nu = j.value("nu", gate.nu);
    gate.xi0 = j.value("xi0", gate.xi0);
    gate.amplitude = j.value("amplitude", gate.amplitude);
    gate.sample_rate = j.value("sample_rate", gate.sample_rate);
    gate.periods = j.value("periods", gate.periods);
    cfg.f_det = j.value("f_det", cfg.f_det);
    cfg.noise_rms = j.value("noise_rms", cfg.noise_rms);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.nbar = j.value("nbar", cfg.nbar);
    cfg.eta_ld = j.value("eta_ld", cfg.eta_ld);
    cfg.eta_ref = j.value("eta_ref", cfg.eta_ref);
    cfg.use_phase_model = j.value("phase_model", cfg.use_phase_model);
}

int cmd_fit_transfer(const std::string& input, const std::string& kind_name, int order,
                     bool normalize, const std::string& output) {
    const ResponseKind kind =
        kind_name == "phase" ? ResponseKind::phase : ResponseKind::amplitude;
    CalibrationDataset ds = io::read_calibration_csv(input, kind);
    PolynomialTransfer fitted;
    if (kind == ResponseKind::amplitude) {
        if (normalize) ds = normalize_unit_slope(ds);
        fitted = fit_amplitude(ds, order == 0 ? 8 : order);
    } else {
        fitted = fit_phase(ds, order == 0 ? 5 : order);
    }
    io::save_json(output_path(output), io::transfer_to_json(fitted));
    std::cout << "wrote " << output_path(output) << " (residual rms " << fitted.residual_rms();
    if (kind == ResponseKind::amplitude) std::cout << ", a_corr " << compute_a_corr(fitted);
    std::cout << ")\n";
    return kExitOk;
}

int cmd_invert(const ModelOptions& models, int samples, const std::string& output) {
    const PolynomialTransfer amp = models.amplitude();
    const PredistortionMap map = invert(amp);
    std::ofstream out(output_path(output));
    if (!out) throw InputError("cannot write " + output_path(output));
    out << "target,drive\n";
    for (int i = 0; i < samples; ++i) {
        const double u = map.a_corr() * i / (samples - 1);
        out << io::fmt(u) << ',' << io::fmt(map(u)) << '\n';
    }
    std::cout << "a_corr = " << map.a_corr() << "\n";
    return kExitOk;
}

IQWaveform load_waveform(const std::string& path) {
    if (path.ends_with(".json")) return io::waveform_from_json(io::load_json(path));
    return io::read_waveform_csv(path);
}

void store_waveform(const std::string& path, const IQWaveform& w, const std::string& format) {
    if (format == "json")
        io::save_json(path, io::waveform_to_json(w));
    else
        io::write_waveform_csv(path, w);
}

int cmd_synth(const GateOptions& gate, const std::string& format, const std::string& output) {
    const GateSpec spec = GateSpec::cardioid(gate.nu, gate.xi0, gate.amplitude);
    const IQWaveform w = synth_cardioid(spec, gate.sample_rate, gate.periods);
    store_waveform(output_path(output), w, format);
    std::cout << "wrote " << output_path(output) << " (" << w.samples.size() << " samples, "
              << w.duration() * 1e6 << " us)\n";
    return kExitOk;
}

int cmd_predistort(const ModelOptions& models, const std::string& input,
                   const std::string& format, const std::string& output) {
    const PredistortionMap map = invert(models.amplitude());
    const IQWaveform w = predistort(load_waveform(input), map);
    store_waveform(output_path(output), w, format);
    std::cout << "wrote " << output_path(output) << "\n";
    return kExitOk;
}

int cmd_simulate(const ModelOptions& models, const GateOptions& gate, bool dpd, bool no_phase,
                 const std::string& format, const std::string& output) {
    const PolynomialTransfer amp = models.amplitude();
    const auto phase = models.phase();
    const GateSpec spec = GateSpec::cardioid(gate.nu, gate.xi0, gate.amplitude);
    IQWaveform w = synth_cardioid(spec, gate.sample_rate, gate.periods);
    if (dpd) w = predistort(w, invert(amp));
    const OpticalWaveform opt = forward(w, amp, (!no_phase && phase) ? &*phase : nullptr);
    IQWaveform out;  // reuse the waveform writers for the optical envelope
    out.sample_rate = opt.sample_rate;
    out.samples = opt.samples;
    out.dpd_applied = opt.dpd_applied;
    store_waveform(output_path(output), out, format);
    std::cout << "wrote " << output_path(output) << " (eta_bar "
              << eta_bar(w, amp) << ")\n";
    return kExitOk;
}

int cmd_spectrum(const ModelOptions& models, const GateOptions& gate, const SimConfig& cfg_in,
                 bool dpd, const std::string& output) {
    SimConfig cfg = cfg_in;
    cfg.nu = gate.nu;
    cfg.xi0 = gate.xi0;
    cfg.sample_rate = gate.sample_rate;
    cfg.n_periods = gate.periods;
    const PolynomialTransfer amp = models.amplitude();
    const auto phase = models.phase();
    const PredistortionMap map = invert(amp);
    const SweepPoint pt =
        simulate_point(cfg, amp, phase ? &*phase : nullptr, map, gate.amplitude, dpd);
    json j;
    j["blue"] = io::tone_report_to_json(pt.blue);
    j["red"] = io::tone_report_to_json(pt.red);
    j["r10_db"] = pt.r10_db;
    j["r23_db"] = pt.r23_db;
    j["eta_bar"] = pt.eta_bar;
    io::save_json(output_path(output), j);
    std::cout << "R10 = " << pt.r10_db << " dB, R23 = " << pt.r23_db << " dB\n";
    return kExitOk;
}

int cmd_estimate_fidelity(const std::string& tones_path, double nbar, double xi0, double eta_ld,
                          const std::string& output, const std::string& trace_csv) {
    const json j = io::load_json(tones_path);
    FidelityEstimate est;
    const bool both = j.contains("blue") && j.contains("red");
    const ToneReport first = io::tone_report_from_json(both ? j.at("blue") : j);
    if (both) {
        est = estimate_from_tones(first, io::tone_report_from_json(j.at("red")), nbar, xi0, eta_ld);
    } else {
        est = estimate_from_tones(first, nbar, xi0, eta_ld);
    }
    json out{{"fidelity", est.value}, {"infidelity", 1.0 - est.value}, {"nbar", est.nbar}};
    if (est.blue) out["blue"] = *est.blue;
    if (est.red) out["red"] = *est.red;
    io::save_json(output_path(output), out);
    if (!trace_csv.empty()) {
        // phase-space trace of the four-tone spectrum (first sideband group)
        DriveSpectrum spec;
        spec.xi0 = xi0;
        spec.eta_ld = eta_ld;
        std::array<double, 4> r{};
        for (int n = 0; n < 4; ++n)
            r[static_cast<std::size_t>(n)] =
                std::sqrt(std::pow(10.0, first.tones[static_cast<std::size_t>(n)].power_db / 10.0));
        for (auto& v : r) v /= r[1];
        spec.tones = {{0, -r[0], 0.0}, {1, r[1], 0.0}, {2, -r[2], 0.0}, {3, r[3], 0.0}};
        calibrate_omega(spec);
        io::write_trace_csv(output_path(trace_csv), phase_space_trace(spec, 2001));
    }
    std::cout << "estimated fidelity " << est.value << "\n";
    return kExitOk;
}

int cmd_thresholds(double nbar, const std::string& output) {
    const auto rows = im_threshold_table({1e-2, 1e-3, 1e-4}, nbar);
    io::write_thresholds_csv(output_path(output), rows);
    for (const auto& r : rows)
        std::cout << r.target_infidelity << ": n0 " << r.n0_db << " dB, n3 " << r.n3_db << " dB\n";
    return kExitOk;
}

int cmd_sweep(const ModelOptions& models, const SimConfig& cfg, double a_min, double a_max,
              int a_steps) {
    if (cfg.noise_rms > 0.0 && cfg.seed == 0)
        throw InputError("synthetic noise requires an explicit --seed");
    const PolynomialTransfer amp = models.amplitude();
    const auto phase = models.phase();
    PredistortionMap map = invert(amp);
    map.build_cache();

    std::vector<double> grid;
    for (int i = 0; i < a_steps; ++i)
        grid.push_back(a_min + (a_max - a_min) * i / std::max(1, a_steps - 1));
    const auto points = run_sweep(cfg, amp, phase ? &*phase : nullptr, map, grid);

    io::write_sweep_csv(output_path("spectral_sweep.csv"), points);
    io::write_fidelity_csv(output_path("fidelity_vs_eta.csv"), points);
    io::write_thresholds_csv(output_path("thresholds.csv"), im_threshold_table({1e-2, 1e-3, 1e-4}, cfg.nbar));

    EtaGridParams grid_params;
    grid_params.nu = cfg.nu;
    grid_params.xi0 = cfg.xi0;
    grid_params.sample_rate = cfg.sample_rate;
    grid_params.eta_ref = cfg.eta_ref;
    io::write_efficiency_csv(output_path("efficiency_curve.csv"),
                             eta_bar_grid(amp, map, grid_params));

    // threshold efficiencies per DPD arm, log-log interpolation
    std::ofstream out(output_path("eta_thresholds.csv"));
    out << "budget,eta_th_nodpd,eta_th_dpd,ratio\n";
    std::vector<EfficiencyPoint> off, on;
    for (const auto& p : points)
        (p.dpd ? on : off).push_back({p.eta_bar, 1.0 - p.fidelity_est});
    for (double budget : {1e-2, 1e-3, 1e-4}) {
        try {
            const double t_off = threshold_efficiency(off, std::vector<double>{budget})[0];
            const double t_on = threshold_efficiency(on, std::vector<double>{budget})[0];
            out << io::fmt(budget) << ',' << io::fmt(t_off) << ',' << io::fmt(t_on) << ','
                << io::fmt(t_on / t_off) << '\n';
        } catch (const BudgetNotCrossed&) {
            out << io::fmt(budget) << ",nan,nan,nan\n";
        }
    }
    std::cout << "wrote spectral_sweep.csv, fidelity_vs_eta.csv, thresholds.csv, eta_thresholds.csv, efficiency_curve.csv\n";
    return kExitOk;
}

Setting setting_from_json(const json& j) {
    return Setting{j.at("a").get<double>(), j.at("dpd").get<bool>()};
}

int cmd_analyze(const std::string& manifest_path, const std::string& pd_curve_path,
                const std::string& output, const std::string& fit_output) {
    const json manifest = io::load_json(manifest_path);
    if (!manifest.contains("settings") || manifest.at("settings").empty())
        throw InputError("manifest has no settings");
    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (base / p).string();
    };

    json report = json::array();
    std::vector<GatePoint> gate_points;
    for (const auto& s : manifest.at("settings")) {
        const Setting setting = setting_from_json(s);
        std::vector<PopulationRecord> pops;
        for (const auto& f : s.value("population", json::array()))
            for (const auto& r : io::read_population_csv(resolve(f.get<std::string>()), setting))
                pops.push_back(r);
        std::vector<ParityScan> scans;
        for (const auto& f : s.value("parity", json::array()))
            scans.push_back(io::read_parity_csv(resolve(f.get<std::string>()), setting));
        if (pops.empty() || scans.empty())
            throw InputError("each setting needs population and parity data");

        const auto pop = population_fidelity(pool_populations(pops));
        const ParityScan merged = merge_parity(scans);
        const ParityFit par = parity_mle(merged);
        const ValueWithSigma par_v{std::abs(par.contrast), par.sigma_contrast};
        const auto bell = bell_fidelity(pop, par_v);

        json row{{"a", setting.drive_amplitude}, {"dpd", setting.dpd},
                 {"f_pop", pop.value},           {"sigma_pop", pop.sigma},
                 {"f_par", par_v.value},         {"sigma_par", par_v.sigma},
                 {"hessian_ok", par.hessian_ok}, {"fidelity", bell.value},
                 {"sigma", bell.sigma},          {"n_parity_points", merged.points.size()}};
        report.push_back(row);

        if (s.contains("xi0_khz")) {
            GatePoint gp;
            gp.setting = setting;
            gp.xi0_khz = s.at("xi0_khz").get<double>();
            gp.sigma_xi0_khz = s.value("sigma_xi0_khz", 0.05);
            gp.fidelity = bell.value;
            gp.sigma_fidelity = bell.sigma;
            gate_points.push_back(gp);
        }
    }
    io::save_json(output_path(output), report);
    std::cout << "wrote " << output_path(output) << " (" << report.size() << " settings)\n";

    if (!pd_curve_path.empty()) {
        std::vector<PdCurvePoint> pd;
        for (const auto& row : io::read_csv(pd_curve_path, "a,dpd,r_rel,fidelity_pd")) {
            if (row.size() != 4) throw InputError("pd curve rows need a,dpd,r_rel,fidelity_pd");
            pd.push_back({Setting{io::parse_double(row[0], pd_curve_path),
                                  io::parse_double(row[1], pd_curve_path) != 0.0},
                          io::parse_double(row[2], pd_curve_path),
                          io::parse_double(row[3], pd_curve_path)});
        }
        const AxisFit fit = fit_axes(gate_points, pd);
        io::save_json(output_path(fit_output), io::axis_fit_to_json(fit));
        std::cout << "axis fit: alpha " << fit.alpha_khz << " +- " << fit.sigma_alpha
                  << " kHz, delta " << fit.delta << " +- " << fit.sigma_delta << "\n";
    }
    return kExitOk;
}

int cmd_fit_axes(const std::string& gate_path, const std::string& pd_path, const std::string& output) {
    std::vector<GatePoint> gate_points;
    for (const auto& row : io::read_csv(gate_path, "a,dpd,xi0_khz,sigma_xi0_khz,fidelity,sigma_fidelity")) {
        if (row.size() != 6) throw InputError("gate rows need 6 columns");
        GatePoint gp;
        gp.setting = {io::parse_double(row[0], gate_path), io::parse_double(row[1], gate_path) != 0.0};
        gp.xi0_khz = io::parse_double(row[2], gate_path);
        gp.sigma_xi0_khz = io::parse_double(row[3], gate_path);
        gp.fidelity = io::parse_double(row[4], gate_path);
        gp.sigma_fidelity = io::parse_double(row[5], gate_path);
        gate_points.push_back(gp);
    }
    std::vector<PdCurvePoint> pd;
    for (const auto& row : io::read_csv(pd_path, "a,dpd,r_rel,fidelity_pd")) {
        if (row.size() != 4) throw InputError("pd curve rows need 4 columns");
        pd.push_back({Setting{io::parse_double(row[0], pd_path), io::parse_double(row[1], pd_path) != 0.0},
                      io::parse_double(row[2], pd_path), io::parse_double(row[3], pd_path)});
    }
    const AxisFit fit = fit_axes(gate_points, pd);
    io::save_json(output_path(output), io::axis_fit_to_json(fit));
    std::cout << "alpha " << fit.alpha_khz << " +- " << fit.sigma_alpha << " kHz, delta "
              << fit.delta << " +- " << fit.sigma_delta << "\n";
    return kExitOk;
}

int cmd_stability(const std::vector<std::string>& inputs, const std::string& kind_name,
                  bool normalize, const std::string& output, const std::string& envelope_csv) {
    const ResponseKind kind = kind_name == "phase" ? ResponseKind::phase : ResponseKind::amplitude;
    std::vector<PolynomialTransfer> runs;
    for (const auto& path : inputs) {
        CalibrationDataset ds = io::read_calibration_csv(path, kind);
        if (kind == ResponseKind::amplitude) {
            if (normalize) ds = normalize_unit_slope(ds);
            runs.push_back(fit_amplitude(ds));
        } else {
            runs.push_back(fit_phase(ds));
        }
    }
    const StabilityReport rep = stability_stats(runs);
    json j{{"n_runs", rep.n_runs}, {"mean", rep.mean}, {"sigma", rep.sigma}, {"per_run", rep.per_run}};
    io::save_json(output_path(output), j);
    if (!envelope_csv.empty()) {
        std::ofstream out(output_path(envelope_csv));
        out << "drive,lower,upper\n";
        for (std::size_t i = 0; i < rep.grid.size(); ++i)
            out << io::fmt(rep.grid[i]) << ',' << io::fmt(rep.envelope_lower[i]) << ','
                << io::fmt(rep.envelope_upper[i]) << '\n';
    }
    std::cout << "mean " << rep.mean << ", sigma " << rep.sigma << " over " << rep.n_runs << " runs\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AOM digital-predistortion simulation and analysis toolkit"};
    app.require_subcommand(1);

    // fit-transfer
    auto* fit = app.add_subcommand("fit-transfer", "fit a calibration CSV to a polynomial model");
    std::string fit_input, fit_kind = "amplitude", fit_output = "model.json";
    int fit_order = 0;
    bool fit_normalize = false;
    fit->add_option("--input,-i", fit_input, "calibration CSV (drive,value)")->required();
    fit->add_option("--kind", fit_kind, "amplitude|phase")->check(CLI::IsMember({"amplitude", "phase"}));
    fit->add_option("--order", fit_order, "polynomial order (default 8 amplitude, 5 phase)");
    fit->add_flag("--normalize", fit_normalize, "apply unit-slope normalization first (amplitude)");
    fit->add_option("--output,-o", fit_output, "model JSON path");

    // invert
    auto* inv = app.add_subcommand("invert", "tabulate the predistortion map of an amplitude model");
    ModelOptions inv_models;
    inv_models.attach(inv, false);
    int inv_samples = 1001;
    std::string inv_output = "predistortion.csv";
    inv->add_option("--samples", inv_samples, "rows in the sampled inverse");
    inv->add_option("--output,-o", inv_output, "CSV path (target,drive)");

    // synth
    auto* synth = app.add_subcommand("synth", "synthesize a Cardioid(1,2) waveform");
    GateOptions synth_gate;
    synth_gate.attach(synth);
    std::string synth_format = "csv", synth_output = "waveform.csv";
    synth->add_option("--format", synth_format)->check(CLI::IsMember({"csv", "json"}));
    synth->add_option("--output,-o", synth_output);

    // predistort
    auto* pre = app.add_subcommand("predistort", "apply sample-wise predistortion to a waveform");
    ModelOptions pre_models;
    pre_models.attach(pre, false);
    std::string pre_input, pre_format = "csv", pre_output = "waveform_dpd.csv";
    pre->add_option("--input,-i", pre_input, "waveform CSV/JSON")->required();
    pre->add_option("--format", pre_format)->check(CLI::IsMember({"csv", "json"}));
    pre->add_option("--output,-o", pre_output);

    // simulate
    auto* simc = app.add_subcommand("simulate", "propagate a gate waveform through the AOM model");
    ModelOptions sim_models;
    sim_models.attach(simc);
    GateOptions sim_gate;
    sim_gate.attach(simc);
    bool sim_dpd = false, sim_no_phase = false;
    std::string sim_format = "csv", sim_output = "optical.csv";
    simc->add_flag("--dpd", sim_dpd, "apply predistortion before the AOM");
    simc->add_flag("--no-phase", sim_no_phase, "ignore the phase response");
    simc->add_option("--format", sim_format)->check(CLI::IsMember({"csv", "json"}));
    simc->add_option("--output,-o", sim_output);

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "heterodyne tone report for one operating point");
    ModelOptions spec_models;
    spec_models.attach(spec);
    GateOptions spec_gate;
    spec_gate.periods = 40;  // 2 ms record: 500 Hz resolution for tone extraction
    spec_gate.attach(spec);
    SimConfig spec_cfg;
    bool spec_dpd = false;
    std::string spec_config, spec_output = "tones.json";
    spec->add_flag("--dpd", spec_dpd);
    spec->add_option("--f-det", spec_cfg.f_det, "detection offset, Hz");
    spec->add_option("--noise-rms", spec_cfg.noise_rms);
    spec->add_option("--seed", spec_cfg.seed);
    spec->add_option("--config", spec_config, "JSON config (flags override)");
    spec->add_option("--output,-o", spec_output);

    // estimate-fidelity
    auto* est = app.add_subcommand("estimate-fidelity", "phase-space fidelity from a tone report");
    std::string est_input, est_output = "fidelity.json";
    double est_nbar = 0.1, est_xi0 = 1e3, est_eta = 0.026;
    std::string est_trace;
    est->add_option("--tones,-i", est_input, "tone report JSON")->required();
    est->add_option("--nbar", est_nbar);
    est->add_option("--xi0", est_xi0);
    est->add_option("--eta-ld", est_eta);
    est->add_option("--output,-o", est_output);
    est->add_option("--trace-csv", est_trace, "write the phase-space trajectory (t,f,g)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "drive-amplitude sweep, DPD on/off");
    ModelOptions sweep_models;
    sweep_models.attach(sweep);
    SimConfig sweep_cfg;
    GateOptions sweep_gate;
    sweep_gate.periods = 40;
    double sweep_amin = 0.05, sweep_amax = 0.95;
    int sweep_steps = 19;
    std::string sweep_config;
    sweep->add_option("--config", sweep_config, "JSON config (flags override)");
    sweep->add_option("--nu", sweep_gate.nu);
    sweep->add_option("--xi0", sweep_gate.xi0);
    sweep->add_option("--sample-rate", sweep_gate.sample_rate);
    sweep->add_option("--periods", sweep_gate.periods);
    sweep->add_option("--f-det", sweep_cfg.f_det);
    sweep->add_option("--a-min", sweep_amin);
    sweep->add_option("--a-max", sweep_amax);
    sweep->add_option("--a-steps", sweep_steps);
    sweep->add_option("--noise-rms", sweep_cfg.noise_rms);
    sweep->add_option("--seed", sweep_cfg.seed);
    sweep->add_option("--nbar", sweep_cfg.nbar);
    bool sweep_no_phase = false;
    sweep->add_flag("--no-phase", sweep_no_phase);

    // thresholds
    auto* thr = app.add_subcommand("thresholds", "required gate/IM power ratios per error budget");
    double thr_nbar = 0.1;
    std::string thr_output = "thresholds.csv";
    thr->add_option("--nbar", thr_nbar);
    thr->add_option("--output,-o", thr_output);

    // analyze
    auto* ana = app.add_subcommand("analyze", "Bell fidelities from an experiment manifest");
    std::string ana_manifest, ana_pd, ana_output = "fidelity_report.json", ana_fit = "axis_fit.json";
    ana->add_option("--manifest,-m", ana_manifest, "manifest JSON")->required();
    ana->add_option("--pd-curve", ana_pd, "photodiode curve CSV (a,dpd,r_rel,fidelity_pd)");
    ana->add_option("--output,-o", ana_output);
    ana->add_option("--fit-output", ana_fit);

    // fit-axes
    auto* axes = app.add_subcommand("fit-axes", "two-parameter gate-rate/fidelity axis fit");
    std::string axes_gate, axes_pd, axes_output = "axis_fit.json";
    axes->add_option("--gate-points", axes_gate, "CSV a,dpd,xi0_khz,sigma_xi0_khz,fidelity,sigma_fidelity")
        ->required();
    axes->add_option("--pd-curve", axes_pd, "CSV a,dpd,r_rel,fidelity_pd")->required();
    axes->add_option("--output,-o", axes_output);

    // stability
    auto* stab = app.add_subcommand("stability", "calibration-stability statistics across runs");
    std::vector<std::string> stab_inputs;
    std::string stab_kind = "amplitude", stab_output = "stability.json", stab_envelope;
    bool stab_normalize = false;
    stab->add_option("--input,-i", stab_inputs, "calibration CSVs (repeatable)")->required();
    stab->add_option("--kind", stab_kind)->check(CLI::IsMember({"amplitude", "phase"}));
    stab->add_flag("--normalize", stab_normalize);
    stab->add_option("--output,-o", stab_output);
    stab->add_option("--envelope-csv", stab_envelope, "optional mean +- sigma envelope CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed())
            return cmd_fit_transfer(fit_input, fit_kind, fit_order, fit_normalize, fit_output);
        if (inv->parsed()) return cmd_invert(inv_models, inv_samples, inv_output);
        if (synth->parsed()) return cmd_synth(synth_gate, synth_format, synth_output);
        if (pre->parsed()) return cmd_predistort(pre_models, pre_input, pre_format, pre_output);
        if (simc->parsed())
            return cmd_simulate(sim_models, sim_gate, sim_dpd, sim_no_phase, sim_format, sim_output);
        if (spec->parsed()) {
            if (!spec_config.empty()) apply_config_file(spec_config, spec_cfg, spec_gate);
            if (spec_cfg.noise_rms > 0.0 && spec_cfg.seed == 0)
                throw InputError("synthetic noise requires an explicit --seed");
            return cmd_spectrum(spec_models, spec_gate, spec_cfg, spec_dpd, spec_output);
        }
        if (est->parsed())
            return cmd_estimate_fidelity(est_input, est_nbar, est_xi0, est_eta, est_output, est_trace);
        if (sweep->parsed()) {
            if (!sweep_config.empty()) apply_config_file(sweep_config, sweep_cfg, sweep_gate);
            sweep_cfg.nu = sweep_gate.nu;
            sweep_cfg.xi0 = sweep_gate.xi0;
            sweep_cfg.sample_rate = sweep_gate.sample_rate;
            sweep_cfg.n_periods = sweep_gate.periods;
            sweep_cfg.use_phase_model = !sweep_no_phase;
            return cmd_sweep(sweep_models, sweep_cfg, sweep_amin, sweep_amax, sweep_steps);
        }
        if (thr->parsed()) return cmd_thresholds(thr_nbar, thr_output);
        if (ana->parsed()) return cmd_analyze(ana_manifest, ana_pd, ana_output, ana_fit);
        if (axes->parsed()) return cmd_fit_axes(axes_gate, axes_pd, axes_output);
        if (stab->parsed())
            return cmd_stability(stab_inputs, stab_kind, stab_normalize, stab_output, stab_envelope);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InsufficientLowAmplitudeData& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NonMonotonicFit& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NonMonotonicTransfer& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InsufficientRangeCoverage& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const UndersampledSpec& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const UndersampledBeat& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ComplexEnvelopeUnsupported& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const DegenerateScan& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const UnderdeterminedFit& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const InvalidGateTones& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
