#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "aomdpd/errors.hpp"
#include "aomdpd/numeric.hpp"

namespace aomdpd {

enum class ResponseKind { amplitude, phase };

struct CalPoint {
    double drive;  // normalized RF amplitude A in [0, 1]
    double value;  // measured optical amplitude or phase (rad)
};

// Raw calibration samples, drives strictly increasing within [0, 1].
struct CalibrationDataset {
    std::vector<CalPoint> points;
    ResponseKind kind = ResponseKind::amplitude;

    void validate() const {
        double prev = -1.0;
        for (const auto& p : points) {
            if (p.drive < 0.0 || p.drive > 1.0) throw InputError("calibration drive outside [0, 1]");
            if (p.drive <= prev) throw InputError("calibration drives must be strictly increasing");
            if (kind == ResponseKind::amplitude && p.value < 0.0)
                throw InputError("amplitude calibration values must be non-negative");
            prev = p.drive;
        }
    }
};

// Static transfer response as a fitted polynomial sum_{k=1..K} c_k A^k.
// The missing constant term pins f(0) = 0. Evaluation applies the memoryless
// symmetry conventions: odd for amplitude, even for phase, |x| clipped to 1.
class PolynomialTransfer {
public:
    PolynomialTransfer() = default;
    PolynomialTransfer(std::vector<double> coefficients, ResponseKind kind, double residual_rms = 0.0)
        : coeffs_(std::move(coefficients)), kind_(kind), residual_rms_(residual_rms) {}

    double evaluate(double x) const {
        const double a = std::min(std::abs(x), 1.0);
        const double f = numeric::polyval_no_const(coeffs_, a);
        if (kind_ == ResponseKind::phase) return f;
        return x < 0.0 ? -f : f;
    }

    // Evaluation without the symmetry/clip wrapper, a expected in [0, 1].
    double eval_raw(double a) const { return numeric::polyval_no_const(coeffs_, a); }
    double derivative_raw(double a) const { return numeric::polyder_no_const(coeffs_, a); }

    bool monotone_increasing(int grid_points = 1001) const {
        for (int i = 0; i < grid_points; ++i) {
            const double a = static_cast<double>(i) / (grid_points - 1);
            if (derivative_raw(a) < 0.0) return false;
        }
        return true;
    }

    // Whether the clamped inverse is single-valued: every target u < f(1) must
    // have exactly one preimage, i.e. the curve never falls back below a level
    // it already reached while also sitting below the clamp level f(1).
    // Physical responses that peak at full drive (diffraction efficiency
    // maximized at A = 1) stay above f(1) after the peak and remain invertible.
    bool clamp_invertible(int grid_points = 1001) const {
        const double a_corr = eval_raw(1.0);
        if (!(a_corr > 0.0)) return false;
        const double tol = 1e-12 * std::max(1.0, std::abs(a_corr));
        double running_max = 0.0;
        for (int i = 0; i < grid_points; ++i) {
            const double a = static_cast<double>(i) / (grid_points - 1);
            const double f = eval_raw(a);
            if (f < running_max - tol && f < a_corr - tol) return false;
            running_max = std::max(running_max, f);
        }
        return true;
    }

    const std::vector<double>& coefficients() const { return coeffs_; }
    int order() const { return static_cast<int>(coeffs_.size()); }
    ResponseKind kind() const { return kind_; }
    double residual_rms() const { return residual_rms_; }

private:
    std::vector<double> coeffs_;  // c1..cK
    ResponseKind kind_ = ResponseKind::amplitude;
    double residual_rms_ = 0.0;
};

// Rescale an amplitude dataset so a through-origin fit over the A < 0.2
// points has unit slope. Drives are untouched.
inline CalibrationDataset normalize_unit_slope(const CalibrationDataset& dataset) {
    if (dataset.kind != ResponseKind::amplitude)
        throw KindMismatch("normalize_unit_slope expects an amplitude dataset");
    dataset.validate();
    double saa = 0.0, say = 0.0;
    int n_low = 0;
    for (const auto& p : dataset.points) {
        if (p.drive < 0.2) {
            saa += p.drive * p.drive;
            say += p.drive * p.value;
            ++n_low;
        }
    }
    if (n_low < 4)
        throw InsufficientLowAmplitudeData("need at least 4 calibration points below A = 0.2");
    const double slope = say / saa;
    if (!(slope > 0.0)) throw InputError("origin slope is not positive");
    CalibrationDataset out = dataset;
    for (auto& p : out.points) p.value /= slope;
    return out;
}

namespace detail {
inline PolynomialTransfer fit_poly(std::span<const CalPoint> pts, int order, ResponseKind kind) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd V(n, order);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 1.0;
        for (int k = 0; k < order; ++k) {
            p *= pts[static_cast<std::size_t>(i)].drive;
            V(i, k) = p;
        }
        y(i) = pts[static_cast<std::size_t>(i)].value;
    }
    const Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);
    const double rms = std::sqrt((V * c - y).squaredNorm() / static_cast<double>(n));
    return PolynomialTransfer(std::vector<double>(c.data(), c.data() + order), kind, rms);
}
}  // namespace detail

inline PolynomialTransfer fit_amplitude(const CalibrationDataset& dataset, int order = 8) {
    if (dataset.kind != ResponseKind::amplitude)
        throw KindMismatch("fit_amplitude expects an amplitude dataset");
    dataset.validate();
    if (static_cast<int>(dataset.points.size()) < order + 2)
        throw InputError("fit_amplitude needs at least order + 2 points");
    auto t = detail::fit_poly(dataset.points, order, ResponseKind::amplitude);
    if (!t.clamp_invertible())
        throw NonMonotonicFit("fitted amplitude response is not invertible on [0, 1]");
    return t;
}

inline PolynomialTransfer fit_phase(const CalibrationDataset& dataset, int order = 5,
                                    double fit_lo = 0.1, double fit_hi = 1.0) {
    if (dataset.kind != ResponseKind::phase)
        throw KindMismatch("fit_phase expects a phase dataset");
    dataset.validate();
    std::vector<CalPoint> window;
    bool has_high = false, has_low = false;
    for (const auto& p : dataset.points) {
        if (p.drive >= fit_lo && p.drive <= fit_hi) window.push_back(p);
        if (p.drive > 0.9) has_high = true;
        if (p.drive < 0.3) has_low = true;
    }
    if (!has_high || !has_low)
        throw InsufficientRangeCoverage("phase calibration must cover below A = 0.3 and above A = 0.9");
    if (static_cast<int>(window.size()) < order + 1)
        throw InputError("fit_phase needs more points inside the fit range");
    return detail::fit_poly(window, order, ResponseKind::phase);
}

// Maximum correctable amplitude: with unit slope at the origin this is f(1).
inline double compute_a_corr(const PolynomialTransfer& t) {
    if (t.kind() != ResponseKind::amplitude) throw KindMismatch("a_corr is defined for amplitude responses");
    return t.eval_raw(1.0);
}

// Monotone inverse of an amplitude response. Each query solves f(g) = u by
// Brent root-finding on [0, 1]; targets above a_corr clamp to full drive.
// An optional dense-grid cache trades exactness for speed and must agree with
// root-finding to 1e-6 (checked in the test suite).
class PredistortionMap {
public:
    PredistortionMap() = default;
    PredistortionMap(PolynomialTransfer source, double tolerance)
        : source_(std::move(source)), tol_(tolerance), a_corr_(source_.eval_raw(1.0)) {}

    double operator()(double u) const {
        if (u <= 0.0) return 0.0;
        if (u >= a_corr_) return 1.0;
        if (cache_) return std::min(1.0, std::max(0.0, (*cache_)(u)));
        return numeric::brent_root([&](double g) { return source_.eval_raw(g) - u; }, 0.0, 1.0, tol_);
    }

    double a_corr() const { return a_corr_; }
    const PolynomialTransfer& source() const { return source_; }
    bool cached() const { return cache_.has_value(); }

    // Build the 1001-point monotone-interpolation accelerator. Nodes are laid
    // out uniformly in drive along the rising branch, which clusters targets
    // where the response flattens and keeps the interpolant within 1e-6 of
    // root-finding.
    void build_cache(int grid_points = 1001) {
        const double g_end = rising_branch_end();
        std::vector<double> u, g;
        u.reserve(static_cast<std::size_t>(grid_points));
        g.reserve(static_cast<std::size_t>(grid_points));
        u.push_back(0.0);
        g.push_back(0.0);
        for (int i = 1; i < grid_points; ++i) {
            const double gi = g_end * static_cast<double>(i) / (grid_points - 1);
            const double ui = source_.eval_raw(gi);
            if (ui > u.back() + 1e-15) {
                u.push_back(ui);
                g.push_back(gi);
            }
        }
        cache_.emplace(std::move(u), std::move(g));
    }
    void drop_cache() { cache_.reset(); }

private:
    // First drive at which the response reaches the clamp level f(1); 1 for a
    // strictly increasing response.
    double rising_branch_end() const {
        constexpr int scan = 4096;
        double prev_g = 0.0, prev_f = source_.eval_raw(0.0);
        for (int i = 1; i <= scan; ++i) {
            const double gi = static_cast<double>(i) / scan;
            const double fi = source_.eval_raw(gi);
            if (prev_f < a_corr_ && fi >= a_corr_) {
                if (fi == a_corr_ || i == scan) return gi;
                return numeric::brent_root(
                    [&](double x) { return source_.eval_raw(x) - a_corr_; }, prev_g, gi, tol_);
            }
            prev_g = gi;
            prev_f = fi;
        }
        return 1.0;
    }

    PolynomialTransfer source_;
    double tol_ = 1e-9;
    double a_corr_ = 0.0;
    std::optional<numeric::MonotoneCubic> cache_;
};

inline PredistortionMap invert(const PolynomialTransfer& t, double tolerance = 1e-9) {
    if (t.kind() != ResponseKind::amplitude)
        throw KindMismatch("only amplitude responses are inverted");
    if (!t.clamp_invertible())
        throw NonMonotonicTransfer("amplitude response is not invertible; predistortion undefined");
    return PredistortionMap(t, tolerance);
}

struct ReferenceModel {
    PolynomialTransfer amplitude;
    PolynomialTransfer phase;
    double beta;  // sin(beta)/beta = 0.5655
};

// Canonical synthetic AOM: amplitude y(A) = sin(beta*A)/beta with y(1) = 0.5655
// (unit slope at the origin by construction), phase 0.2776*A^2. Both are shipped
// as the polynomial fits the rest of the toolkit consumes.
inline const ReferenceModel& reference_model() {
    static const ReferenceModel model = [] {
        const double target = 0.5655;
        const double beta = numeric::brent_root(
            [&](double b) { return std::sin(b) / b - target; }, 1e-9, 3.14159, 1e-14);
        constexpr int n = 201;
        CalibrationDataset amp{.points = {}, .kind = ResponseKind::amplitude};
        CalibrationDataset phs{.points = {}, .kind = ResponseKind::phase};
        amp.points.reserve(n);
        phs.points.reserve(n);
        for (int i = 0; i < n; ++i) {
            const double a = static_cast<double>(i) / (n - 1);
            amp.points.push_back({a, std::sin(beta * a) / beta});
            phs.points.push_back({a, 0.2776 * a * a});
        }
        // The sine response peaks just inside full drive (beta > pi/2), so it
        // is fitted directly; clamped inversion stays well defined because the
        // curve never falls below y(1).
        ReferenceModel m{detail::fit_poly(amp.points, 8, ResponseKind::amplitude),
                         fit_phase(phs, 5), beta};
        return m;
    }();
    return model;
}

enum class StabilitySummary { response_at_full_drive };  // y(1) or phi(1), per kind

struct StabilityReport {
    int n_runs = 0;
    double mean = 0.0;
    double sigma = 0.0;                 // sample standard deviation
    std::vector<double> per_run;        // f(1) per calibration run
    std::vector<double> grid;           // common drive grid (101 points)
    std::vector<double> envelope_lower; // pointwise mean - sigma
    std::vector<double> envelope_upper; // pointwise mean + sigma
};

inline StabilityReport stability_stats(std::span<const PolynomialTransfer> runs) {
    if (runs.size() < 2) throw InputError("stability_stats needs at least 2 runs");
    const ResponseKind kind = runs.front().kind();
    for (const auto& r : runs)
        if (r.kind() != kind) throw KindMismatch("stability runs must share one response kind");

    StabilityReport rep;
    rep.n_runs = static_cast<int>(runs.size());
    for (const auto& r : runs) rep.per_run.push_back(r.eval_raw(1.0));
    rep.mean = numeric::mean(rep.per_run);
    rep.sigma = numeric::sample_stddev(rep.per_run);

    constexpr int grid_n = 101;
    rep.grid.resize(grid_n);
    rep.envelope_lower.resize(grid_n);
    rep.envelope_upper.resize(grid_n);
    std::vector<double> vals(runs.size());
    for (int i = 0; i < grid_n; ++i) {
        const double a = static_cast<double>(i) / (grid_n - 1);
        rep.grid[static_cast<std::size_t>(i)] = a;
        for (std::size_t k = 0; k < runs.size(); ++k) vals[k] = runs[k].eval_raw(a);
        const double m = numeric::mean(vals);
        const double s = numeric::sample_stddev(vals);
        rep.envelope_lower[static_cast<std::size_t>(i)] = m - s;
        rep.envelope_upper[static_cast<std::size_t>(i)] = m + s;
    }
    return rep;
}

}  // namespace aomdpd
