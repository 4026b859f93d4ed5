#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "aomdpd/analysis.hpp"

using namespace aomdpd;
using Catch::Approx;

namespace {

ParityScan synthesize_scan(double contrast, double phase0, int n_phases, long shots,
                           std::mt19937_64* rng) {
    ParityScan scan;
    scan.setting = {0.5, true};
    for (int i = 0; i < n_phases; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n_phases;
        const double p = 0.5 * (1.0 + contrast * std::cos(2.0 * phi + phase0));
        ParityPoint pt;
        pt.phase = phi;
        pt.total = static_cast<double>(shots);
        if (rng) {
            std::binomial_distribution<long> bin(shots, p);
            pt.even = static_cast<double>(bin(*rng));
        } else {
            pt.even = p * static_cast<double>(shots);  // noiseless expectation
        }
        scan.points.push_back(pt);
    }
    return scan;
}

}  // namespace

TEST_CASE("population_fidelity") {
    CHECK(population_fidelity({625, 625, {}}).value == 1.0);
    CHECK(population_fidelity({625, 625, {}}).sigma == 0.0);
    const auto r = population_fidelity({500, 625, {}});
    CHECK(r.value == Approx(0.8));
    CHECK(r.sigma == Approx(std::sqrt(0.8 * 0.2 / 625)).epsilon(1e-12));
    CHECK(population_fidelity({0, 625, {}}).value == 0.0);
}

TEST_CASE("pool_populations") {
    const Setting s{0.5, false};
    SECTION("two identical records halve the variance") {
        PopulationRecord a{600, 625, s};
        const auto pooled = pool_populations(std::vector<PopulationRecord>{a, a});
        CHECK(pooled.even_count == 1200);
        CHECK(pooled.total == 1250);
        const auto one = population_fidelity(a);
        const auto two = population_fidelity(pooled);
        CHECK(two.value == Approx(one.value));
        CHECK(two.sigma == Approx(one.sigma / std::numbers::sqrt2).epsilon(1e-12));
    }
    SECTION("single record is the identity") {
        PopulationRecord a{600, 625, s};
        const auto pooled = pool_populations(std::vector<PopulationRecord>{a});
        CHECK(pooled.even_count == a.even_count);
        CHECK(pooled.total == a.total);
    }
    SECTION("counts add") {
        const auto pooled = pool_populations(
            std::vector<PopulationRecord>{{600, 625, s}, {590, 625, s}});
        CHECK(pooled.even_count == 1190);
        CHECK(pooled.total == 1250);
    }
}

TEST_CASE("parity_mle recovers noiseless generators exactly") {
    const auto scan = synthesize_scan(0.89, 0.3, 16, 625, nullptr);
    const auto fit = parity_mle(scan);
    CHECK(fit.contrast == Approx(0.89).margin(1e-6));
    CHECK(fit.phase0 == Approx(0.3).margin(1e-6));
    CHECK(fit.hessian_ok);
}

TEST_CASE("parity_mle on a flat fringe") {
    ParityScan scan;
    scan.setting = {0.5, false};
    for (int i = 0; i < 16; ++i)
        scan.points.push_back({2.0 * std::numbers::pi * i / 16, 312.0, 624.0});
    const auto fit = parity_mle(scan);
    CHECK(std::abs(fit.contrast) < 1e-4);
}

TEST_CASE("parity_mle recovers the published contrast within errors") {
    std::mt19937_64 rng(101);
    const auto scan = synthesize_scan(0.958, 0.7, 16, 625, &rng);
    const auto fit = parity_mle(scan);
    REQUIRE(fit.hessian_ok);
    CHECK(std::abs(fit.contrast - 0.958) < 3.0 * fit.sigma_contrast);
    CHECK(fit.sigma_contrast < 0.01);
}

TEST_CASE("parity_mle consistency as shots grow") {
    std::mt19937_64 rng(55);
    double prev_err = 1.0;
    for (long shots : {100L, 10000L, 1000000L}) {
        double err = 0.0;
        for (int rep = 0; rep < 3; ++rep) {
            const auto fit = parity_mle(synthesize_scan(0.9, 1.1, 16, shots, &rng));
            err += std::abs(fit.contrast - 0.9) / 3.0;
        }
        CHECK(err < prev_err + 3e-3);
        prev_err = err;
    }
    CHECK(prev_err < 1e-3);
}

TEST_CASE("parity_mle degenerate inputs") {
    SECTION("too few points") {
        ParityScan scan;
        scan.points = {{0.0, 10, 20}, {1.0, 10, 20}, {2.0, 10, 20}};
        CHECK_THROWS_AS(parity_mle(scan), DegenerateScan);
    }
    SECTION("insufficient phase coverage") {
        ParityScan scan;
        for (int i = 0; i < 8; ++i) scan.points.push_back({0.1 * i, 10, 20});
        CHECK_THROWS_AS(parity_mle(scan), DegenerateScan);
    }
    SECTION("empty shots") {
        ParityScan scan;
        for (int i = 0; i < 8; ++i) scan.points.push_back({0.7 * i, 0, 0});
        CHECK_THROWS_AS(parity_mle(scan), DegenerateScan);
    }
}

TEST_CASE("merge_parity") {
    const Setting s{0.6, true};
    SECTION("duplicate scan doubles every count") {
        std::mt19937_64 rng(7);
        const auto scan = synthesize_scan(0.9, 0.2, 16, 625, &rng);
        auto copy = scan;
        copy.setting = s;
        auto orig = scan;
        orig.setting = s;
        const auto merged = merge_parity(std::vector<ParityScan>{orig, copy});
        REQUIRE(merged.points.size() == scan.points.size());
        double total = 0.0;
        for (const auto& pt : merged.points) total += pt.total;
        CHECK(total == Approx(2 * 16 * 625));
    }
    SECTION("rounding onto the 0.01 rad grid") {
        ParityScan a;
        a.setting = s;
        a.points = {{0.004, 5, 10}, {0.006, 7, 10}, {1.0, 1, 10}, {2.0, 2, 10}};
        const auto merged = merge_parity(std::vector<ParityScan>{a});
        // 0.004 -> 0.00, 0.006 -> 0.01; ties round half-even: 0.005 -> 0.00, 0.015 -> 0.02
        CHECK(merged.points[0].phase == Approx(0.0));
        CHECK(merged.points[1].phase == Approx(0.01));
        ParityScan ties;
        ties.setting = s;
        ties.points = {{0.005, 1, 10}, {0.015, 2, 10}, {1.0, 1, 10}, {2.0, 2, 10}};
        const auto m2 = merge_parity(std::vector<ParityScan>{ties});
        CHECK(m2.points[0].phase == Approx(0.0));
        CHECK(m2.points[1].phase == Approx(0.02));
    }
    SECTION("merging sharpens the contrast estimate") {
        std::mt19937_64 rng(13);
        std::vector<ParityScan> scans;
        for (int k = 0; k < 4; ++k) scans.push_back(synthesize_scan(0.9, 0.2, 16, 625, &rng));
        const auto single = parity_mle(scans[0]);
        const auto merged = parity_mle(merge_parity(scans));
        CHECK(merged.sigma_contrast < single.sigma_contrast);
    }
}

TEST_CASE("bell_fidelity") {
    CHECK(bell_fidelity({1.0, 0.0}, {1.0, 0.0}).value == 1.0);
    CHECK(bell_fidelity({1.0, 0.0}, {1.0, 0.0}).sigma == 0.0);
    const auto f = bell_fidelity({0.98, 0.0}, {0.9697, 0.0});
    CHECK(f.value == Approx(0.97485).margin(1e-12));
    const auto s = bell_fidelity({0.9, 0.003}, {0.9, 0.004});
    CHECK(s.sigma == Approx(0.0025).margin(1e-12));
}

TEST_CASE("gate_rate_map") {
    std::vector<SimSweepEntry> sweep = {
        {{0.4, false}, -20.0}, {{0.6, false}, -13.98}, {{0.4, true}, -18.0}};
    const auto rel = gate_rate_map(sweep);
    CHECK(rel[0].r_rel == Approx(1.0));
    CHECK(rel[1].r_rel == Approx(2.0).margin(1e-3));  // +6.02 dB doubles the rate
    CHECK(rel[2].r_rel == Approx(std::pow(10.0, 2.0 / 20.0)).epsilon(1e-12));

    std::vector<SimSweepEntry> missing = {{{0.5, false}, -10.0}};
    CHECK_THROWS_AS(gate_rate_map(missing), InputError);
}

TEST_CASE("rate_uncertainty") {
    CHECK(rate_uncertainty(0.2) == Approx(0.02303).margin(1e-5));
    CHECK(rate_uncertainty(0.0) == 0.0);
    CHECK(rate_uncertainty(20.0 / std::numbers::ln10) == Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(rate_uncertainty(-0.1), InputError);
}

namespace {

std::pair<std::vector<GatePoint>, std::vector<PdCurvePoint>> synth_axis_data(
    double alpha, double delta, double sigma_h, double sigma_v, std::mt19937_64* rng) {
    std::vector<GatePoint> gate;
    std::vector<PdCurvePoint> pd;
    std::normal_distribution<double> nh(0.0, sigma_h), nv(0.0, sigma_v);
    for (int i = 0; i < 8; ++i) {
        const Setting s{0.4 + 0.05 * i, i % 2 == 1};
        const double r = 1.0 + 0.15 * i;
        const double fpd = 0.99 - 0.004 * i;
        pd.push_back({s, r, fpd});
        GatePoint gp;
        gp.setting = s;
        gp.xi0_khz = alpha * r + (rng ? nh(*rng) : 0.0);
        gp.sigma_xi0_khz = sigma_h > 0 ? sigma_h : 0.05;
        gp.fidelity = fpd + delta + (rng ? nv(*rng) : 0.0);
        gp.sigma_fidelity = sigma_v > 0 ? sigma_v : 0.003;
        gate.push_back(gp);
    }
    return {gate, pd};
}

}  // namespace

TEST_CASE("fit_axes") {
    SECTION("noiseless data is recovered exactly") {
        auto [gate, pd] = synth_axis_data(3.42, -0.018, 0.0, 0.0, nullptr);
        const auto fit = fit_axes(gate, pd);
        CHECK(fit.alpha_khz == Approx(3.42).margin(1e-9));
        CHECK(fit.delta == Approx(-0.018).margin(1e-12));
        for (double r : fit.residuals_v) CHECK(std::abs(r) < 1e-9);
    }
    SECTION("uniform weight rescaling leaves the optimum unchanged") {
        auto [gate, pd] = synth_axis_data(3.42, -0.018, 0.2, 0.004, nullptr);
        std::mt19937_64 rng(3);
        std::normal_distribution<double> nh(0.0, 0.2), nv(0.0, 0.004);
        for (auto& g : gate) {
            g.xi0_khz += nh(rng);
            g.fidelity += nv(rng);
        }
        const auto fit1 = fit_axes(gate, pd);
        auto scaled = gate;
        for (auto& g : scaled) {
            g.sigma_xi0_khz *= 2.0;
            g.sigma_fidelity *= 2.0;
        }
        // the power-fluctuation term breaks exact invariance for the horizontal
        // block, so compare with it switched off
        const auto fit2 = fit_axes(scaled, pd, 0.0);
        const auto fit1b = fit_axes(gate, pd, 0.0);
        CHECK(fit2.alpha_khz == Approx(fit1b.alpha_khz).epsilon(1e-12));
        CHECK(fit2.delta == Approx(fit1b.delta).epsilon(1e-12));
        CHECK(fit1.delta == Approx(fit1b.delta).epsilon(1e-12));
    }
    SECTION("underdetermined inputs are rejected") {
        auto [gate, pd] = synth_axis_data(3.42, -0.018, 0.0, 0.0, nullptr);
        std::vector<GatePoint> one = {gate[0]};
        CHECK_THROWS_AS(fit_axes(one, pd), UnderdeterminedFit);
    }
}

TEST_CASE("threshold_efficiency") {
    SECTION("straight log-log line hits the budget exactly") {
        std::vector<EfficiencyPoint> curve;
        for (int i = 0; i <= 20; ++i) {
            const double eta = 0.01 * std::pow(100.0, i / 20.0);  // 0.01 .. 1
            curve.push_back({eta, 1e-3 * (eta / 0.1)});           // crosses 1e-3 at eta = 0.1
        }
        const auto th = threshold_efficiency(curve, std::vector<double>{1e-3});
        CHECK(th[0] == Approx(0.1).epsilon(1e-9));
    }
    SECTION("uncrossed budget") {
        std::vector<EfficiencyPoint> curve = {{0.01, 1e-6}, {0.1, 1e-5}, {0.5, 1e-4}};
        CHECK_THROWS_AS(threshold_efficiency(curve, std::vector<double>{1e-2}), BudgetNotCrossed);
    }
}
