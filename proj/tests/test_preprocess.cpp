// tests for thrust coefficients, tip-speed reference, normalization, noise metric
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fincast/preprocess.hpp"
#include "fincast/util.hpp"
#include "helpers.hpp"

using namespace fincast;

namespace {

KinematicSetting make_setting(double samp, double pamp, double freq, int n = 64) {
    KinematicSetting s;
    s.stroke_amplitude_deg = samp;
    s.pitch_amplitude_deg = pamp;
    s.flap_frequency_hz = freq;
    s.n_steps_per_cycle = n;
    return s;
}

double popstd(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
}

// two cycles whose samples cover every (bin, state) cell of the metric grid,
// with constant per-cycle values v0/v1
std::vector<std::vector<DevSample>> full_coverage_pair(int n_bins, double v0, double v1) {
    std::vector<std::vector<DevSample>> cycles(2);
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < n_bins; ++b)
            for (int state : {0, 1}) {
                DevSample d;
                d.stroke_deg = -60.0 + (b + 0.5) / n_bins * 120.0;
                d.stroke_state = state;
                d.value = c == 0 ? v0 : v1;
                cycles[c].push_back(d);
            }
    // anchor the common range so bin centers stay put
    cycles[0].push_back({-60.0, 1, v0});
    cycles[0].push_back({60.0, 1, v0});
    cycles[1].push_back({-60.0, 1, v1});
    cycles[1].push_back({60.0, 1, v1});
    return cycles;
}

}  // namespace

TEST_CASE("thrust coefficient normalizes by dynamic pressure times area") {
    CHECK(thrust_coefficient(0.0, 1000, 1.0, 0.01) == 0.0);
    // 5 N / (0.5 * 1000 * 1^2 * 0.01) = 1
    CHECK(thrust_coefficient(5.0, 1000, 1.0, 0.01) == doctest::Approx(1.0));
    // linear in thrust
    CHECK(thrust_coefficient(-2.5, 1000, 1.0, 0.01) == doctest::Approx(-0.5));
    // quadratic in speed
    CHECK(thrust_coefficient(5.0, 1000, 2.0, 0.01) == doctest::Approx(0.25));
    CHECK_THROWS_AS(thrust_coefficient(1.0, 0.0, 1.0, 0.01), ValidationError);
    CHECK_THROWS_AS(thrust_coefficient(1.0, 1000, 0.0, 0.01), ValidationError);
    CHECK_THROWS_AS(thrust_coefficient(1.0, 1000, 1.0, -0.01), ValidationError);
}

TEST_CASE("tip speed matches the closed form for a pure stroke") {
    // tip of the registered rectangle sits at z = 23.175 cm from the stroke
    // axis; mean |d/dt (A sin wt)| = 4 A f, so v = 4 A f r
    const FinShape& rect = builtin_shape("rect");
    double r_m = (20.0 + 3.175) / 100.0;
    double expect = 4.0 * (60.0 * M_PI / 180.0) * 1.0 * r_m;
    double got = reference_tip_speed(rect, AxisFrame{}, make_setting(60, 0, 1.0));
    CHECK(got == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("tip speed matches the closed form for a pure pitch") {
    // pitch spins the tip about the z axis at radius x = 8.75 cm
    const FinShape& rect = builtin_shape("rect");
    double r_m = (10.0 - 1.25) / 100.0;
    double expect = 4.0 * (40.0 * M_PI / 180.0) * 2.0 * r_m;
    double got = reference_tip_speed(rect, AxisFrame{}, make_setting(0, 40, 2.0));
    CHECK(got == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("tip speed ignores the dataset step count and converges in quadrature") {
    const FinShape& bio = builtin_shape("bio");
    double a = reference_tip_speed(bio, AxisFrame{}, make_setting(60, 40, 1.0, 16));
    double b = reference_tip_speed(bio, AxisFrame{}, make_setting(60, 40, 1.0, 256));
    CHECK(same_bits(a, b));  // quadrature resolution is independent of n_steps
    double fine = reference_tip_speed(bio, AxisFrame{}, make_setting(60, 40, 1.0), 90.0, 4096);
    CHECK(a == doctest::Approx(fine).epsilon(2e-4));
    // speed scales linearly with frequency
    double twice = reference_tip_speed(bio, AxisFrame{}, make_setting(60, 40, 2.0));
    CHECK(twice == doctest::Approx(2 * a).epsilon(1e-9));
}

TEST_CASE("norm stats map a two-point feature onto +/- 1") {
    std::vector<std::vector<double>> recs{{0.0}, {2.0}};
    std::vector<double> coeffs{0.0, 2.0};
    NormStats st = fit_norm_stats(recs, coeffs);
    CHECK(st.mean[0] == doctest::Approx(1.0));
    CHECK(st.stddev[0] == doctest::Approx(1.0));
    CHECK(st.thrust_scale == doctest::Approx(1.0));
    CHECK(st.apply({0.0})[0] == doctest::Approx(-1.0));
    CHECK(st.apply({2.0})[0] == doctest::Approx(1.0));
    CHECK(st.constant_features.empty());
}

TEST_CASE("constant features are flagged and normalized to zero") {
    std::vector<std::vector<double>> recs{{3.0, 1.0}, {3.0, 2.0}, {3.0, 3.0}};
    std::vector<double> coeffs{1.0, 2.0, 3.0};
    NormStats st = fit_norm_stats(recs, coeffs);
    REQUIRE(st.constant_features == std::vector<int>{0});
    CHECK(st.stddev[0] == 1.0);  // stored std 1 keeps apply() total
    CHECK(st.apply({3.0, 2.0})[0] == 0.0);
    CHECK(st.apply({3.0, 2.0})[1] == doctest::Approx(0.0).scale(1));
}

TEST_CASE("apply/invert round trip and unit thrust scale") {
    Rng r(5);
    std::vector<std::vector<double>> recs;
    std::vector<double> coeffs;
    for (int i = 0; i < 200; ++i) {
        recs.push_back({r.uniform(-3, 9), r.normal() * 12, r.uniform(0, 1)});
        coeffs.push_back(r.normal() * 0.4 + 0.1);
    }
    NormStats st = fit_norm_stats(recs, coeffs);
    for (int i = 0; i < 200; ++i) {
        auto back = st.invert(st.apply(recs[i]));
        for (size_t j = 0; j < back.size(); ++j)
            CHECK(back[j] == doctest::Approx(recs[i][j]).epsilon(1e-12));
    }
    std::vector<double> normed;
    for (double c : coeffs) normed.push_back(st.apply_thrust(c));
    CHECK(popstd(normed) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(st.invert_thrust(st.apply_thrust(0.37)) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("norm stats serialize round trip") {
    std::vector<std::vector<double>> recs{{1.0, 5.0}, {2.0, 5.0}, {4.0, 5.0}};
    std::vector<double> coeffs{0.1, 0.5, 0.9};
    NormStats st = fit_norm_stats(recs, coeffs);
    NormStats back = NormStats::from_json(st.to_json());
    REQUIRE(back.mean.size() == st.mean.size());
    for (size_t i = 0; i < st.mean.size(); ++i) {
        CHECK(same_bits(back.mean[i], st.mean[i]));
        CHECK(same_bits(back.stddev[i], st.stddev[i]));
    }
    CHECK(back.constant_features == st.constant_features);
    CHECK(same_bits(back.thrust_scale, st.thrust_scale));
    CHECK_THROWS_AS(NormStats::from_json("not json"), InputError);
    CHECK_THROWS_AS(NormStats::from_json("{\"mean\": [0]}"), SchemaError);
}

TEST_CASE("fit_norm_stats rejects degenerate inputs") {
    CHECK_THROWS_AS(fit_norm_stats({}, {}), ValidationError);
    // constant thrust column cannot define a scale
    CHECK_THROWS_AS(fit_norm_stats({{1.0}, {2.0}}, {0.5, 0.5}), ValidationError);
    // record/coefficient count mismatch
    CHECK_THROWS_AS(fit_norm_stats({{1.0}, {2.0}}, {0.5}), ValidationError);
}

TEST_CASE("identical cycles give zero deviation") {
    auto cycles = full_coverage_pair(100, 0.7, 0.7);
    CHECK(thrust_deviation(cycles, 100) == 0.0);
}

TEST_CASE("constant offset pair gives half the offset") {
    double c = 0.84;
    auto cycles = full_coverage_pair(100, 0.2, 0.2 + c);
    CHECK(thrust_deviation(cycles, 100) == doctest::Approx(c / 2).epsilon(1e-12));
    // invariant under shifting both cycles
    auto shifted = full_coverage_pair(100, 5.2, 5.2 + c);
    CHECK(thrust_deviation(shifted, 100) == doctest::Approx(c / 2).epsilon(1e-12));
}

TEST_CASE("deviation scales linearly with the values") {
    Rng r(17);
    std::vector<std::vector<DevSample>> cycles(3);
    for (auto& cyc : cycles)
        for (int i = 0; i < 50; ++i)
            cyc.push_back({r.uniform(-60, 60), r.uniform() < 0.5 ? 0 : 1, r.normal()});
    double base = thrust_deviation(cycles, 20);
    CHECK(base > 0);
    auto scaled = cycles;
    for (auto& cyc : scaled)
        for (auto& d : cyc) d.value *= 2.5;
    CHECK(thrust_deviation(scaled, 20) == doctest::Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("sparse cells contribute zero but still count") {
    // two samples land in different cells: every cell has < 2 samples
    std::vector<std::vector<DevSample>> apart{{{0.0, 1, 5.0}}, {{1.0, 1, 9.0}}};
    CHECK(thrust_deviation(apart, 2) == 0.0);
    // same cell: one populated cell out of 2*n_bins, popstd = 2
    std::vector<std::vector<DevSample>> together{{{0.2, 1, 5.0}}, {{0.2, 1, 9.0}}};
    CHECK(thrust_deviation(together, 1) == doctest::Approx(2.0 / 2).epsilon(1e-12));
    CHECK(thrust_deviation(together, 5) == doctest::Approx(2.0 / 10).epsilon(1e-12));
}

TEST_CASE("upstroke and downstroke cells are separate") {
    // same angles, same values per state; states differ between cycles at one angle
    std::vector<std::vector<DevSample>> cycles{
        {{0.0, 1, 1.0}, {0.0, 0, 5.0}},
        {{0.0, 1, 3.0}, {0.0, 0, 9.0}},
    };
    // up cell popstd 1, down cell popstd 2, mean over 2 cells
    CHECK(thrust_deviation(cycles, 1) == doctest::Approx((1.0 + 2.0) / 2).epsilon(1e-12));
}

TEST_CASE("deviation input validation") {
    std::vector<std::vector<DevSample>> one{{{0.0, 1, 1.0}}};
    CHECK_THROWS_AS(thrust_deviation(one, 10), ValidationError);
    std::vector<std::vector<DevSample>> empty_cycles{{}, {}};
    CHECK_THROWS_AS(thrust_deviation(empty_cycles, 10), ValidationError);
    auto ok = full_coverage_pair(4, 0, 1);
    CHECK_THROWS_AS(thrust_deviation(ok, 0), ValidationError);
}
