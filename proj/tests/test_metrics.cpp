#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vistra/error.hpp"
#include "vistra/metrics.hpp"

using namespace vistra;
using namespace vistra::metrics;

namespace {

std::vector<RdPoint> scaled(const std::vector<RdPoint>& pts, double rate_factor, double quality_delta) {
    std::vector<RdPoint> out;
    for (auto p : pts)
        out.push_back({p.bitrate_kbps * rate_factor, p.quality + quality_delta});
    return out;
}

std::vector<oracle::Rd> to_oracle(const std::vector<RdPoint>& pts) {
    std::vector<oracle::Rd> out;
    for (auto p : pts)
        out.push_back({p.bitrate_kbps, p.quality});
    return out;
}

const std::vector<RdPoint> anchor_points{{1000, 30.0}, {2000, 33.5}, {4000, 36.2}, {8000, 38.4}};

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("PSNR reference values") {
    const Frame a = vistra::testing::constant_frame(16, 16, 10, ChromaFormat::C420, 0, 512);
    const Frame b = vistra::testing::constant_frame(16, 16, 10, ChromaFormat::C420, 1023, 512);
    const Frame c = vistra::testing::constant_frame(16, 16, 10, ChromaFormat::C420, 2, 512);
    CHECK(psnr_luma(a, a) == psnr_cap_db);
    CHECK(psnr_luma(a, b) == doctest::Approx(0.0));
    CHECK(psnr_luma(a, c) == doctest::Approx(10.0 * std::log10(1023.0 * 1023.0 / 4.0)));
    CHECK(psnr_luma(a, c) == doctest::Approx(54.2).epsilon(1e-3));
    CHECK_THROWS_AS(psnr_luma(a, Frame(8, 8, 10, ChromaFormat::C420)), ConfigError);

    VideoSequence s1, s2;
    s1.frames = {a, a};
    s2.frames = {a, c};
    CHECK(psnr_luma_sequence(s1, s2) == doctest::Approx(0.5 * (999.0 + psnr_luma(a, c))));
}

TEST_CASE("RD curves need four points with distinct rates") {
    CHECK_THROWS_AS(RdCurve({{1, 1}, {2, 2}, {3, 3}}), ConfigError);
    CHECK_THROWS_AS(RdCurve({{1, 1}, {2, 2}, {2, 3}, {4, 4}}), ConfigError);
    CHECK_THROWS_AS(RdCurve({{0, 1}, {2, 2}, {3, 3}, {4, 4}}), ConfigError);
    const RdCurve c({{4000, 36}, {1000, 30}, {8000, 38}, {2000, 33}});
    CHECK(c.points().front().bitrate_kbps == 1000);
    CHECK_FALSE(c.non_monotone());
    CHECK(RdCurve({{1, 5}, {2, 4}, {3, 6}, {4, 7}}).non_monotone());
}

TEST_CASE("cubic fit interpolates four points and integrates exactly") {
    const std::vector<double> x{1.0, 2.0, 3.5, 5.0}, y{2.0, -1.0, 0.5, 4.0};
    const Cubic c = fit_cubic(x, y);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(c(x[i]) == doctest::Approx(y[i]).epsilon(1e-10));
    const double numeric = oracle::trapezoid([&](double t) { return oracle::lagrange(x, y, t); }, 1.2, 4.7, 20000);
    CHECK(c.integral(1.2, 4.7) == doctest::Approx(numeric).epsilon(1e-7));
}

TEST_CASE("BD of identical curves is zero") {
    const RdCurve a(anchor_points);
    CHECK(std::abs(bd_metric(a, a, BdKind::BD_RATE).value) < 1e-9);
    CHECK(std::abs(bd_metric(a, a, BdKind::BD_QUALITY).value) < 1e-9);
}

TEST_CASE("half the rate at equal quality is -50 percent") {
    const RdCurve a(anchor_points), t(scaled(anchor_points, 0.5, 0.0));
    const double v = bd_metric(a, t, BdKind::BD_RATE).value;
    CHECK(std::abs(v + 50.0) < 0.1);
    CHECK(std::abs(v - oracle::bd_rate_numeric(to_oracle(anchor_points), to_oracle(scaled(anchor_points, 0.5, 0.0)))) < 1e-3);
}

TEST_CASE("one dB uniform gain is one dB BD quality") {
    const RdCurve a(anchor_points), t(scaled(anchor_points, 1.0, 1.0));
    const double v = bd_metric(a, t, BdKind::BD_QUALITY).value;
    CHECK(std::abs(v - 1.0) < 0.01);
}

TEST_CASE("BD values agree with the numeric oracle on irregular curves") {
    std::mt19937 rng(61);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    std::uniform_real_distribution<double> factor(0.6, 1.3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<RdPoint> test;
        for (auto p : anchor_points)
            test.push_back({p.bitrate_kbps * factor(rng), p.quality + jitter(rng)});
        std::sort(test.begin(), test.end(), [](auto l, auto r) { return l.bitrate_kbps < r.bitrate_kbps; });
        bool distinct = true;
        for (std::size_t i = 1; i < test.size(); ++i)
            distinct = distinct && test[i].bitrate_kbps > test[i - 1].bitrate_kbps && test[i].quality > test[i - 1].quality;
        if (!distinct)
            continue;
        const RdCurve a(anchor_points), t(test);
        CHECK(bd_metric(a, t, BdKind::BD_RATE).value ==
              doctest::Approx(oracle::bd_rate_numeric(to_oracle(anchor_points), to_oracle(test))).epsilon(1e-4));
        CHECK(bd_metric(a, t, BdKind::BD_QUALITY).value ==
              doctest::Approx(oracle::bd_quality_numeric(to_oracle(anchor_points), to_oracle(test))).epsilon(1e-4));
    }
}

TEST_CASE("BD antisymmetry") {
    const std::vector<RdPoint> other{{900, 30.4}, {1900, 33.6}, {4100, 36.9}, {7600, 38.7}};
    const RdCurve a(anchor_points), b(other);
    const double q_ab = bd_metric(a, b, BdKind::BD_QUALITY).value, q_ba = bd_metric(b, a, BdKind::BD_QUALITY).value;
    CHECK(q_ab == doctest::Approx(-q_ba));
    const double r_ab = bd_metric(a, b, BdKind::BD_RATE).value, r_ba = bd_metric(b, a, BdKind::BD_RATE).value;
    CHECK((1.0 + r_ab / 100.0) * (1.0 + r_ba / 100.0) == doctest::Approx(1.0));
}

TEST_CASE("BD warnings and disjoint curves") {
    const RdCurve a(anchor_points);
    const RdCurve bumpy({{1000, 30}, {2000, 34}, {4000, 33.8}, {8000, 38}});
    CHECK_FALSE(bd_metric(a, bumpy, BdKind::BD_RATE).warnings.empty());
    const RdCurve far(scaled(anchor_points, 100.0, 20.0));
    CHECK_THROWS_AS(bd_metric(a, far, BdKind::BD_RATE), ConfigError);
    CHECK_THROWS_AS(bd_metric(a, far, BdKind::BD_QUALITY), ConfigError);
}

TEST_CASE("point above curve") {
    const RdCurve c(anchor_points);
    CHECK(point_above_curve(c, {3000, 36.0}).above);
    CHECK_FALSE(point_above_curve(c, {3000, 34.0}).above);
    const auto on = point_above_curve(c, anchor_points[1]);
    CHECK_FALSE(on.above);
    CHECK_FALSE(on.extrapolated);
    const auto out = point_above_curve(c, {20000, 60.0});
    CHECK(out.above);
    CHECK(out.extrapolated);

    // Dense check against the interpolant of the four points.
    std::vector<double> lx, ly;
    for (auto p : anchor_points) {
        lx.push_back(std::log10(p.bitrate_kbps));
        ly.push_back(p.quality);
    }
    for (double r = 1000; r <= 8000; r *= 1.05) {
        const double q = oracle::lagrange(lx, ly, std::log10(r));
        CHECK(point_above_curve(c, {r, q + 1e-3}).above);
        CHECK_FALSE(point_above_curve(c, {r, q - 1e-3}).above);
    }
}

TEST_CASE("VMAF output parsing") {
    CHECK(parse_vmaf_output("100\n") == 100.0);
    CHECK(parse_vmaf_output("frame 0\nVMAF score: 91.5\nVMAF score = 93.25\n") == 93.25);
    CHECK_THROWS_AS(parse_vmaf_output("no score here"), AdapterError);
    CHECK_THROWS_AS(parse_vmaf_output("101"), AdapterError);
    CHECK_THROWS_AS(parse_vmaf_output(""), AdapterError);
}

TEST_CASE("external VMAF tool") {
    CHECK(vmaf_external("r.yuv", "d.yuv", 16, 16, 10, "echo 93.2 # {ref} {dist}") == doctest::Approx(93.2));
    CHECK(vmaf_external("r.yuv", "d.yuv", 16, 16, 10, "echo 100 {ref} {dist} >/dev/null; echo 100") == 100.0);
    CHECK_THROWS_AS(vmaf_external("r", "d", 16, 16, 10, "echo garbage {ref} {dist}"), AdapterError);
    CHECK_THROWS_AS(vmaf_external("r", "d", 16, 16, 10, "no_such_vmaf_tool_xyz {ref} {dist}"), AdapterError);
    CHECK_THROWS_AS(vmaf_external("r", "d", 16, 16, 10, "echo 50 {ref}"), ConfigError);
}

} // TEST_SUITE
