#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "aomdpd/aom.hpp"
#include "aomdpd/fft.hpp"
#include "aomdpd/transfer.hpp"
#include "aomdpd/waveform.hpp"

using namespace aomdpd;
using Catch::Approx;

TEST_CASE("single-tone spec synthesizes a pure cosine") {
    GateSpec spec;
    spec.nu = 1.84e6;
    spec.xi0 = 20e3;
    spec.drive_amplitude = 1.0;
    spec.tones = {{1, 1.0, 0.0}};
    const auto w = synth_cardioid(spec, 100e6, 1);
    CHECK(w.peak() == Approx(1.0).margin(1e-12));
    const double f = spec.nu + spec.xi0;
    // samples follow cos(2 pi f t) scaled to unit peak
    for (std::size_t i = 0; i < w.samples.size(); i += 97) {
        const double t = static_cast<double>(i) / w.sample_rate;
        CHECK(w.samples[i].real() ==
              Approx(std::cos(2.0 * std::numbers::pi * f * t) * w.peak()).margin(1e-9));
        CHECK(w.samples[i].imag() == 0.0);
    }
}

TEST_CASE("cardioid record length matches the published acquisition") {
    const auto spec = GateSpec::cardioid(1.84e6, 20e3, 1.0);
    const auto w = synth_cardioid(spec, 1e9, 1);
    CHECK(w.samples.size() == 50000);
    CHECK(w.duration() == Approx(50e-6));
}

TEST_CASE("cardioid spectrum has exactly four lines") {
    const auto spec = GateSpec::cardioid(1.84e6, 20e3, 0.8);
    const auto w = synth_cardioid(spec, 50e6, 2);
    std::vector<std::complex<double>> cx(w.samples.begin(), w.samples.end());
    const auto X = fft::cfft(cx);
    const double df = w.sample_rate / static_cast<double>(X.size());
    const auto bin = [&](double f_hz) {
        double f = f_hz < 0.0 ? f_hz + w.sample_rate : f_hz;
        return static_cast<std::size_t>(std::llround(f / df));
    };
    const std::array<double, 4> lines = {spec.nu + spec.xi0, spec.nu + 2 * spec.xi0,
                                         -(spec.nu + spec.xi0), -(spec.nu + 2 * spec.xi0)};
    std::array<double, 4> mags{};
    for (std::size_t k = 0; k < 4; ++k) mags[k] = std::abs(X[bin(lines[k])]);
    for (std::size_t k = 1; k < 4; ++k) CHECK(mags[k] == Approx(mags[0]).epsilon(1e-9));
    CHECK(std::abs(X[bin(spec.nu)]) < 1e-9 * mags[0]);   // no line on the sideband itself
    CHECK(std::abs(X[bin(-spec.nu)]) < 1e-9 * mags[0]);

    // spectral purity: every non-design bin at least 250 dB below the peak
    const double peak = mags[0];
    double worst = 0.0;
    for (std::size_t k = 0; k < X.size(); ++k) {
        bool is_line = false;
        for (double f : lines)
            if (bin(f) == k) is_line = true;
        if (!is_line) worst = std::max(worst, std::abs(X[k]));
    }
    CHECK(20.0 * std::log10(worst / peak) < -250.0);
}

TEST_CASE("normalize_peak") {
    const auto spec = GateSpec::cardioid(1.84e6, 20e3, 1.0);
    auto w = synth_cardioid(spec, 50e6, 1);

    SECTION("plain rescale") {
        for (auto& s : w.samples) s *= 2.0;  // force peak 2
        const auto out = normalize_peak(w, 0.5);
        CHECK(out.peak() == Approx(0.5).margin(1e-12));
    }
    SECTION("idempotence") {
        const auto once = normalize_peak(w, 0.7);
        const auto twice = normalize_peak(once, 0.7);
        for (std::size_t i = 0; i < once.samples.size(); i += 131)
            CHECK(twice.samples[i].real() == Approx(once.samples[i].real()).margin(1e-12));
    }
    SECTION("cardioid peak hits the target") {
        const auto out = normalize_peak(w, 0.4);
        CHECK(out.peak() == Approx(0.4).margin(1e-6));
    }
}

TEST_CASE("undersampled synthesis is rejected") {
    const auto spec = GateSpec::cardioid(1.84e6, 20e3, 0.5);
    CHECK_THROWS_AS(synth_cardioid(spec, 7e6, 1), UndersampledSpec);
}

TEST_CASE("predistortion") {
    const auto& ref = reference_model();
    const auto map = invert(ref.amplitude);

    SECTION("identity map leaves the waveform alone") {
        auto identity_map = invert(PolynomialTransfer({1.0}, ResponseKind::amplitude));
        const auto w = synth_cardioid(GateSpec::cardioid(1.84e6, 20e3, 0.5), 50e6, 1);
        const auto out = predistort(w, identity_map);
        for (std::size_t i = 0; i < w.samples.size(); i += 73)
            CHECK(out.samples[i].real() == Approx(w.samples[i].real()).margin(1e-9));
        CHECK(out.dpd_applied);
    }
    SECTION("constant sample maps through the inverse") {
        IQWaveform w;
        w.sample_rate = 1e6;
        w.spec = GateSpec::cardioid(1e5, 1e3, 0.2);
        w.samples.assign(1000, {0.2, 0.0});
        const auto out = predistort(w, map);
        CHECK(out.samples[0].real() == Approx(0.2043).margin(5e-4));
    }
    SECTION("peak inflates above the target amplitude") {
        const auto w = synth_cardioid(GateSpec::cardioid(1.84e6, 20e3, 0.6), 50e6, 1);
        const auto out = predistort(w, map);
        CHECK(out.peak() > 0.6);
    }
    SECTION("sign covariance") {
        const auto w = synth_cardioid(GateSpec::cardioid(1.84e6, 20e3, 0.5), 50e6, 1);
        auto flipped = w;
        for (auto& s : flipped.samples) s = -s;
        const auto a = predistort(w, map);
        const auto b = predistort(flipped, map);
        for (std::size_t i = 0; i < a.samples.size(); i += 61)
            CHECK(b.samples[i].real() == Approx(-a.samples[i].real()).margin(1e-12));
    }
    SECTION("complex envelopes are rejected") {
        IQWaveform w;
        w.sample_rate = 1e6;
        w.spec = GateSpec::cardioid(1e5, 1e3, 0.5);
        w.samples.assign(100, {0.1, 0.1});
        CHECK_THROWS_AS(predistort(w, map), ComplexEnvelopeUnsupported);
    }
}

TEST_CASE("predistort then forward reproduces the target envelope") {
    const auto& ref = reference_model();
    const auto map = invert(ref.amplitude);
    // peak below a_corr so every sample is correctable
    const auto w = synth_cardioid(GateSpec::cardioid(1.84e6, 20e3, 0.5), 50e6, 1);
    const auto out = forward(predistort(w, map), ref.amplitude);
    double worst = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        worst = std::max(worst, std::abs(out.samples[i].real() - w.samples[i].real()));
    CHECK(worst <= 1e-6);
}
