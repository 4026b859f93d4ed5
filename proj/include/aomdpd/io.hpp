#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aomdpd/analysis.hpp"
#include "aomdpd/aom.hpp"
#include "aomdpd/errors.hpp"
#include "aomdpd/phase_space.hpp"
#include "aomdpd/sim.hpp"
#include "aomdpd/spectral.hpp"
#include "aomdpd/transfer.hpp"
#include "aomdpd/waveform.hpp"

namespace aomdpd::io {

using nlohmann::json;

// All numeric CSV output at full double precision so golden files stay meaningful.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    return out;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                                      const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line != expected_header)
        throw InputError(path + ": expected header '" + expected_header + "', got '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(context + ": cannot parse number '" + s + "'");
    }
}

// --- calibration + transfer models -----------------------------------------

inline CalibrationDataset read_calibration_csv(const std::string& path, ResponseKind kind) {
    CalibrationDataset ds;
    ds.kind = kind;
    for (const auto& row : read_csv(path, "drive,value")) {
        if (row.size() != 2) throw InputError(path + ": calibration rows need two columns");
        ds.points.push_back({parse_double(row[0], path), parse_double(row[1], path)});
    }
    ds.validate();
    return ds;
}

inline void write_calibration_csv(const std::string& path, const CalibrationDataset& ds) {
    std::ofstream out(path);
    out << "drive,value\n";
    for (const auto& p : ds.points) out << fmt(p.drive) << ',' << fmt(p.value) << '\n';
}

inline json transfer_to_json(const PolynomialTransfer& t) {
    json j;
    j["kind"] = t.kind() == ResponseKind::amplitude ? "amplitude" : "phase";
    j["order"] = t.order();
    j["coefficients"] = t.coefficients();
    j["residual_rms"] = t.residual_rms();
    if (t.kind() == ResponseKind::amplitude) j["a_corr"] = compute_a_corr(t);
    return j;
}

inline PolynomialTransfer transfer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "amplitude" && kind != "phase") throw InputError("model kind must be amplitude or phase");
    return PolynomialTransfer(j.at("coefficients").get<std::vector<double>>(),
                              kind == "amplitude" ? ResponseKind::amplitude : ResponseKind::phase,
                              j.value("residual_rms", 0.0));
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return j;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(2) << '\n';
}

// --- waveforms ---------------------------------------------------------------

inline void write_waveform_csv(const std::string& path, const IQWaveform& w) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "t,i,q\n";
    for (std::size_t k = 0; k < w.samples.size(); ++k) {
        out << fmt(static_cast<double>(k) / w.sample_rate) << ',' << fmt(w.samples[k].real()) << ','
            << fmt(w.samples[k].imag()) << '\n';
    }
}

inline json waveform_to_json(const IQWaveform& w) {
    json j;
    j["sample_rate"] = w.sample_rate;
    j["dpd"] = w.dpd_applied;
    json arr = json::array();
    for (const auto& s : w.samples) arr.push_back({s.real(), s.imag()});
    j["samples"] = std::move(arr);
    return j;
}

inline IQWaveform waveform_from_json(const json& j) {
    IQWaveform w;
    w.sample_rate = j.at("sample_rate").get<double>();
    w.dpd_applied = j.value("dpd", false);
    for (const auto& s : j.at("samples")) w.samples.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    return w;
}

inline IQWaveform read_waveform_csv(const std::string& path) {
    const auto rows = read_csv(path, "t,i,q");
    if (rows.size() < 2) throw InputError(path + ": waveform needs at least 2 samples");
    IQWaveform w;
    const double t0 = parse_double(rows[0][0], path);
    const double t1 = parse_double(rows[1][0], path);
    if (!(t1 > t0)) throw InputError(path + ": time column must increase");
    w.sample_rate = 1.0 / (t1 - t0);
    for (const auto& row : rows) {
        if (row.size() != 3) throw InputError(path + ": waveform rows need t,i,q");
        w.samples.push_back({parse_double(row[1], path), parse_double(row[2], path)});
    }
    return w;
}

// --- spectral reports --------------------------------------------------------

inline json tone_report_to_json(const ToneReport& r) {
    json tones;
    for (int n = 0; n < 4; ++n) {
        const auto& e = r.tones[static_cast<std::size_t>(n)];
        tones[std::to_string(n)] = {{"power_db", e.power_db},
                                    {"power", e.power},
                                    {"freq_error_hz", e.freq_error_hz},
                                    {"snr_db", e.snr_db},
                                    {"valid", e.valid},
                                    {"method", e.method == ToneMethod::peak_search ? "peak-search"
                                                                                   : "direct-sample"}};
    }
    return json{{"sideband", r.sideband == Sideband::blue ? "blue" : "red"}, {"tones", tones}};
}

inline ToneReport tone_report_from_json(const json& j) {
    ToneReport r;
    const std::string sb = j.at("sideband").get<std::string>();
    if (sb != "blue" && sb != "red") throw InputError("sideband must be blue or red");
    r.sideband = sb == "blue" ? Sideband::blue : Sideband::red;
    for (int n = 0; n < 4; ++n) {
        const auto& e = j.at("tones").at(std::to_string(n));
        auto& t = r.tones[static_cast<std::size_t>(n)];
        t.power_db = e.at("power_db").get<double>();
        t.power = e.value("power", std::pow(10.0, t.power_db / 10.0));
        t.freq_error_hz = e.value("freq_error_hz", 0.0);
        t.snr_db = e.value("snr_db", 1e3);
        t.valid = e.value("valid", true);
        t.method = (n == 1 || n == 2) ? ToneMethod::peak_search : ToneMethod::direct_sample;
    }
    return r;
}

// --- sweep / threshold / trace CSV schemas -----------------------------------

inline void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& points) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "a,dpd,r10_db,r23_db,dp1_db,dp2_db,eta_bar\n";
    // dp columns compare dpd on/off at matched amplitude; both rows of a pair
    // carry the same values.
    for (std::size_t i = 0; i < points.size(); i += 2) {
        const SweepPoint& off = points[i];
        const SweepPoint& on = points[i + 1];
        const auto [dp1, dp2] = delta_p(on.blue, off.blue);
        const auto [dp1r, dp2r] = delta_p(on.red, off.red);
        const double d1 = 0.5 * (dp1 + dp1r), d2 = 0.5 * (dp2 + dp2r);
        for (const SweepPoint* p : {&off, &on}) {
            out << fmt(p->drive_amplitude) << ',' << (p->dpd ? 1 : 0) << ',' << fmt(p->r10_db) << ','
                << fmt(p->r23_db) << ',' << fmt(d1) << ',' << fmt(d2) << ',' << fmt(p->eta_bar) << '\n';
        }
    }
}

inline void write_fidelity_csv(const std::string& path, const std::vector<SweepPoint>& points) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "a,dpd,eta_bar,fidelity_est,infidelity_est\n";
    for (const auto& p : points) {
        out << fmt(p.drive_amplitude) << ',' << (p.dpd ? 1 : 0) << ',' << fmt(p.eta_bar) << ','
            << fmt(p.fidelity_est) << ',' << fmt(1.0 - p.fidelity_est) << '\n';
    }
}

inline void write_thresholds_csv(const std::string& path, const std::vector<ImThresholdRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "infidelity,n0_db,n3_db\n";
    for (const auto& r : rows)
        out << fmt(r.target_infidelity) << ',' << fmt(r.n0_db) << ',' << fmt(r.n3_db) << '\n';
}

inline void write_trace_csv(const std::string& path, const PhaseSpaceOutcome& out_trace) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "t,f,g\n";
    for (std::size_t i = 0; i < out_trace.trace_t.size(); ++i)
        out << fmt(out_trace.trace_t[i]) << ',' << fmt(out_trace.trace_f[i]) << ','
            << fmt(out_trace.trace_g[i]) << '\n';
}

inline void write_efficiency_csv(const std::string& path, const EfficiencyCurve& curve) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << "a,eta_bar_nodpd,eta_bar_dpd\n";
    for (std::size_t i = 0; i < curve.grid().size(); ++i)
        out << fmt(curve.grid()[i]) << ',' << fmt(curve.values_nodpd()[i]) << ','
            << fmt(curve.values_dpd()[i]) << '\n';
}

// --- experiment records --------------------------------------------------------

inline ParityScan read_parity_csv(const std::string& path, const Setting& setting) {
    ParityScan scan;
    scan.setting = setting;
    for (const auto& row : read_csv(path, "phase_rad,even_count,total")) {
        if (row.size() != 3) throw InputError(path + ": parity rows need three columns");
        ParityPoint pt;
        pt.phase = parse_double(row[0], path);
        pt.even = parse_double(row[1], path);
        pt.total = parse_double(row[2], path);
        if (pt.phase < 0.0 || pt.phase >= 2.0 * std::numbers::pi)
            throw InputError(path + ": analysis phases must lie in [0, 2pi)");
        if (pt.even != std::floor(pt.even) || pt.total != std::floor(pt.total))
            throw InputError(path + ": counts must be integers");
        scan.points.push_back(pt);
    }
    return scan;
}

inline std::vector<PopulationRecord> read_population_csv(const std::string& path, const Setting& setting) {
    std::vector<PopulationRecord> recs;
    for (const auto& row : read_csv(path, "even_count,total")) {
        if (row.size() != 2) throw InputError(path + ": population rows need two columns");
        PopulationRecord r;
        r.even_count = parse_double(row[0], path);
        r.total = parse_double(row[1], path);
        r.setting = setting;
        if (r.even_count != std::floor(r.even_count) || r.total != std::floor(r.total))
            throw InputError(path + ": counts must be integers");
        r.validate();
        recs.push_back(r);
    }
    return recs;
}

inline json axis_fit_to_json(const AxisFit& f) {
    return json{{"alpha_khz", f.alpha_khz},
                {"delta", f.delta},
                {"sigma_alpha", f.sigma_alpha},
                {"sigma_delta", f.sigma_delta}};
}

}  // namespace aomdpd::io
