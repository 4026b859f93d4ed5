#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace aomdpd::numeric {

// Horner evaluation of c1*x + c2*x^2 + ... + cK*x^K (no constant term).
inline double polyval_no_const(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc * x;
}

// Derivative of the same polynomial.
inline double polyder_no_const(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) {
        acc = acc * x + static_cast<double>(i + 1) * coeffs[i];
    }
    return acc;
}

// Brent's method on a bracketing interval [a, b] with f(a)*f(b) <= 0.
inline double brent_root(const std::function<double(double)>& f, double a, double b,
                         double xtol = 1e-12, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::invalid_argument("brent_root: endpoints do not bracket a root");
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < max_iter; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return b;
        if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
            d = e = m;  // bisection
        } else {
            double p, q;
            const double s = fb / fa;
            if (a == c) {  // secant
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {  // inverse quadratic
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d; d = p / q;
            } else {
                d = e = m;
            }
        }
        a = b; fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) { c = a; fc = fa; d = e = b - a; }
    }
    return b;
}

namespace detail {
inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const std::function<double(double)>& f, double a, double fa, double b,
                    double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson quadrature. rel_tol is applied against a coarse estimate of
// the integral scale; abs_floor guards the all-zero integrand.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-9, double abs_floor = 1e-15, int initial_panels = 64) {
    if (a == b) return 0.0;
    const int n = std::max(2, initial_panels);
    const double h = (b - a) / n;
    double scale = 0.0, total = 0.0;
    std::vector<double> fx(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        fx[static_cast<std::size_t>(i)] = f(a + i * h);
        scale = std::max(scale, std::abs(fx[static_cast<std::size_t>(i)]));
    }
    const double tol_per = std::max(abs_floor, rel_tol * scale * std::abs(b - a)) / n;
    for (int i = 0; i < n; ++i) {
        const double x0 = a + i * h, x1 = x0 + h, xm = x0 + 0.5 * h;
        const double f0 = fx[static_cast<std::size_t>(i)], f1 = fx[static_cast<std::size_t>(i) + 1];
        const double fm = f(xm);
        const double whole = detail::simpson(x0, f0, x1, f1, fm);
        total += detail::adapt(f, x0, f0, x1, f1, xm, fm, whole, tol_per, 48);
    }
    return total;
}

inline double mean(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n-1 denominator).
inline double sample_stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1, v.end());
    return 0.5 * (hi + v[mid - 1]);
}

// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw std::invalid_argument("CubicSpline: need matched n >= 2");
        m_.assign(n, 0.0);
        if (n == 2) return;
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        b[0] = 1.0; b[n - 1] = 1.0;  // natural ends: second derivative zero
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            a[i] = h0;
            b[i] = 2.0 * (h0 + h1);
            c[i] = h1;
            d[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        for (std::size_t i = 1; i < n; ++i) {  // Thomas algorithm
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        m_[n - 1] = d[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
    }

    double operator()(double xq) const {
        const std::size_t i = segment(xq);
        const double h = x_[i + 1] - x_[i];
        const double t = xq - x_[i];
        return y_[i] + t * ((y_[i + 1] - y_[i]) / h - h / 6.0 * (2.0 * m_[i] + m_[i + 1])) +
               t * t * 0.5 * m_[i] + t * t * t * (m_[i + 1] - m_[i]) / (6.0 * h);
    }

    const std::vector<double>& knots_x() const { return x_; }
    const std::vector<double>& knots_y() const { return y_; }

private:
    std::size_t segment(double xq) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        auto idx = static_cast<std::size_t>(std::distance(x_.begin(), it));
        if (idx == 0) return 0;
        if (idx >= x_.size()) return x_.size() - 2;
        return idx - 1;
    }

    std::vector<double> x_, y_, m_;
};

// Monotone piecewise-cubic Hermite (Fritsch-Carlson slopes); preserves the
// monotonicity of the data where the plain spline may overshoot.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic: need matched n >= 2");
        std::vector<double> delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        s_.assign(n, 0.0);
        s_[0] = delta[0];
        s_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) {
                s_[i] = 0.0;
            } else {
                const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
                const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
                s_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
    }

    double operator()(double xq) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(std::distance(x_.begin(), it)) - 1;
        i = std::min(i, x_.size() - 2);
        const double h = x_[i + 1] - x_[i];
        const double t = (xq - x_[i]) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * y_[i] + h10 * h * s_[i] + h01 * y_[i + 1] + h11 * h * s_[i + 1];
    }

private:
    std::vector<double> x_, y_, s_;
};

struct NelderMeadResult {
    double x0 = 0.0, x1 = 0.0;
    double fmin = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Two-parameter Nelder-Mead; terminates when the simplex extent in both
// coordinates falls below xtol.
inline NelderMeadResult nelder_mead_2d(const std::function<double(double, double)>& f,
                                       double x0, double x1, double step0, double step1,
                                       double xtol = 1e-10, int max_iter = 2000) {
    struct Vertex { double a, b, val; };
    std::array<Vertex, 3> s = {Vertex{x0, x1, f(x0, x1)},
                               Vertex{x0 + step0, x1, f(x0 + step0, x1)},
                               Vertex{x0, x1 + step1, f(x0, x1 + step1)}};
    auto order = [&] { std::sort(s.begin(), s.end(), [](const Vertex& u, const Vertex& v) { return u.val < v.val; }); };
    order();
    NelderMeadResult res;
    for (int it = 0; it < max_iter; ++it) {
        const double ext_a = std::max(std::abs(s[1].a - s[0].a), std::abs(s[2].a - s[0].a));
        const double ext_b = std::max(std::abs(s[1].b - s[0].b), std::abs(s[2].b - s[0].b));
        if (ext_a < xtol && ext_b < xtol) {
            res.converged = true;
            res.iterations = it;
            break;
        }
        const double ca = 0.5 * (s[0].a + s[1].a), cb = 0.5 * (s[0].b + s[1].b);
        const double ra = ca + (ca - s[2].a), rb = cb + (cb - s[2].b);
        const double fr = f(ra, rb);
        if (fr < s[0].val) {
            const double ea = ca + 2.0 * (ca - s[2].a), eb = cb + 2.0 * (cb - s[2].b);
            const double fe = f(ea, eb);
            s[2] = (fe < fr) ? Vertex{ea, eb, fe} : Vertex{ra, rb, fr};
        } else if (fr < s[1].val) {
            s[2] = Vertex{ra, rb, fr};
        } else {
            const double xa = ca + 0.5 * (s[2].a - ca), xb = cb + 0.5 * (s[2].b - cb);
            const double fx = f(xa, xb);
            if (fx < s[2].val) {
                s[2] = Vertex{xa, xb, fx};
            } else {  // shrink toward best
                for (int k = 1; k < 3; ++k) {
                    s[k].a = s[0].a + 0.5 * (s[k].a - s[0].a);
                    s[k].b = s[0].b + 0.5 * (s[k].b - s[0].b);
                    s[k].val = f(s[k].a, s[k].b);
                }
            }
        }
        order();
        res.iterations = it + 1;
    }
    res.x0 = s[0].a;
    res.x1 = s[0].b;
    res.fmin = s[0].val;
    return res;
}

}  // namespace aomdpd::numeric
