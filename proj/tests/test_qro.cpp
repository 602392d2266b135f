#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "vistra/error.hpp"
#include "vistra/qro.hpp"

using namespace vistra;
using namespace vistra::qro;

namespace {

Plane constant_plane(int w, int h, Sample v) { return Plane(w, h, v); }

Frame checkerboard(int w, int h) {
    Frame f = vistra::testing::constant_frame(w, h, 10, ChromaFormat::C420, 0, 512);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            f.luma().at(x, y) = ((x + y) % 2) ? 800 : 200;
    return f;
}

} // namespace

TEST_SUITE("qro") {

TEST_CASE("temporal information on constant frames") {
    const Plane a = constant_plane(8, 8, 10), b = constant_plane(8, 8, 12), c = constant_plane(8, 8, 15);
    const Plane* w[] = {&a, &b, &c};
    CHECK(temporal_information(w, 0) == doctest::Approx(2.0));
    CHECK(temporal_information(w, 1) == doctest::Approx(2.5));
    CHECK(temporal_information(w, 2) == doctest::Approx(3.0));
    const Plane* single[] = {&a};
    CHECK(temporal_information(single, 0) == 0.0);
    CHECK_THROWS_AS(temporal_information(w, 3), ConfigError);
}

TEST_CASE("temporal information is symmetric and zero for a static window") {
    std::mt19937 rng(41);
    const Frame f = vistra::testing::random_frame(rng, 16, 16, 10, ChromaFormat::C420);
    const Frame g = vistra::testing::random_frame(rng, 16, 16, 10, ChromaFormat::C420);
    const Plane* fg[] = {&f.luma(), &g.luma()};
    const Plane* gf[] = {&g.luma(), &f.luma()};
    CHECK(temporal_information(fg, 0) == temporal_information(gf, 0));
    const Plane* still[] = {&f.luma(), &f.luma(), &f.luma()};
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(temporal_information(still, i) == 0.0);
}

TEST_CASE("SRQM of identical frames is one") {
    std::mt19937 rng(42);
    const Frame f = vistra::testing::natural_frame(rng, 64, 48, 10, ChromaFormat::C420);
    CHECK(srqm_frame(f.luma(), f.luma()) == 1.0);
    const Frame c = vistra::testing::constant_frame(32, 32, 10, ChromaFormat::C420, 500, 512);
    CHECK(srqm_frame(c.luma(), srqm_resample(c).luma()) == doctest::Approx(1.0));
}

TEST_CASE("SRQM penalises detail lost in resampling") {
    std::mt19937 rng(43);
    const Frame smooth = vistra::testing::natural_frame(rng, 64, 64, 10, ChromaFormat::C420);
    const Frame busy = checkerboard(64, 64);
    const double s_smooth = srqm_frame(smooth.luma(), srqm_resample(smooth).luma());
    const double s_busy = srqm_frame(busy.luma(), srqm_resample(busy).luma());
    CHECK(s_busy < s_smooth);
    CHECK(s_busy >= 0.0);
    CHECK(s_smooth <= 1.0);
}

TEST_CASE("SRQM window average and argument checks") {
    std::mt19937 rng(44);
    std::vector<Frame> ref{vistra::testing::natural_frame(rng, 32, 32, 10, ChromaFormat::C420), checkerboard(32, 32)};
    std::vector<Frame> res{srqm_resample(ref[0]), srqm_resample(ref[1])};
    const double mean = 0.5 * (srqm_frame(ref[0].luma(), res[0].luma()) + srqm_frame(ref[1].luma(), res[1].luma()));
    CHECK(srqm_score(ref, res) == doctest::Approx(mean));
    CHECK_THROWS_AS(srqm_score(ref, std::span(res.data(), 1)), FormatError);
    CHECK_THROWS_AS(srqm_frame(ref[0].luma(), Plane(16, 16)), FormatError);
}

TEST_CASE("zero MLP gives one half and decides SR") {
    const MlpModel m = MlpModel::zeros();
    CHECK(mlp_forward(m, QroFeatures{0.9, 3.0, 32.0}) == 0.5);
    CHECK(decide_sr(m, QroFeatures{}));
}

TEST_CASE("saturated output stays inside the open interval") {
    MlpModel m = MlpModel::zeros(4);
    m.output_bias = 100.0;
    const double p = mlp_forward(m, QroFeatures{});
    CHECK(p > 0.999);
    CHECK(p < 1.0);
    m.output_bias = -100.0;
    CHECK(mlp_forward(m, QroFeatures{}) > 0.0);
    CHECK_FALSE(decide_sr(m, QroFeatures{}));
}

TEST_CASE("hand-set MLP matches the closed form") {
    MlpModel m = MlpModel::zeros(2);
    m.feature_norm = {FeatureNorm{0.5, 0.25}, FeatureNorm{10.0, 5.0}, FeatureNorm{32.0, 8.0}};
    m.hidden_weights = {0.5, -1.0, 0.25, -0.75, 0.1, 2.0};
    m.hidden_bias = {0.2, -0.3};
    m.output_weights = {1.5, -0.8};
    m.output_bias = 0.1;
    const QroFeatures f{0.8, 4.0, 37.0};
    const double z0 = (0.8 - 0.5) / 0.25, z1 = (4.0 - 10.0) / 5.0, z2 = (37.0 - 32.0) / 8.0;
    const double h0 = std::tanh(0.2 + 0.5 * z0 - 1.0 * z1 + 0.25 * z2);
    const double h1 = std::tanh(-0.3 - 0.75 * z0 + 0.1 * z1 + 2.0 * z2);
    const double expect = 1.0 / (1.0 + std::exp(-(0.1 + 1.5 * h0 - 0.8 * h1)));
    CHECK(std::abs(mlp_forward(m, f) - expect) < 1e-9);
    CHECK(decide_sr(m, f) == (expect >= 0.5));
}

TEST_CASE("normalize and denormalize are inverse") {
    MlpModel m = MlpModel::zeros();
    m.feature_norm = {FeatureNorm{0.7, 0.1}, FeatureNorm{5.0, 3.0}, FeatureNorm{32.0, 7.0}};
    const QroFeatures f{0.65, 7.5, 27.0};
    const QroFeatures back = m.denormalize(m.normalize(f));
    CHECK(back.srqm_mean == doctest::Approx(f.srqm_mean));
    CHECK(back.ti_mean == doctest::Approx(f.ti_mean));
    CHECK(back.qp_base == doctest::Approx(f.qp_base));
}

TEST_CASE("VSQ2 roundtrip and corruption") {
    MlpModel m = MlpModel::zeros(3);
    m.feature_norm = {FeatureNorm{0.5, 0.25}, FeatureNorm{10.0, 4.0}, FeatureNorm{32.0, 8.0}};
    for (std::size_t i = 0; i < m.hidden_weights.size(); ++i)
        m.hidden_weights[i] = 0.125 * static_cast<double>(i) - 0.5;
    m.hidden_bias = {0.25, -0.5, 0.75};
    m.output_weights = {1.0, -2.0, 0.5};
    m.output_bias = -0.25;
    const auto bytes = serialize_mlp(m);
    CHECK(bytes.size() == 4 + 2 + 2 + 4 * (6 + 9 + 3 + 3 + 1));
    const MlpModel back = parse_mlp(bytes);
    CHECK(back.hidden_size == 3);
    CHECK(back.hidden_weights == m.hidden_weights);
    CHECK(back.output_bias == m.output_bias);
    CHECK(mlp_forward(back, QroFeatures{0.7, 3.0, 30.0}) == mlp_forward(m, QroFeatures{0.7, 3.0, 30.0}));

    vistra::testing::TempDir dir;
    save_mlp(m, (dir / "q.vsq").string());
    CHECK(load_mlp((dir / "q.vsq").string()).hidden_bias == m.hidden_bias);

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(parse_mlp(bad), FormatError);
    CHECK_THROWS_AS(parse_mlp(std::span(bytes.data(), bytes.size() - 1)), FormatError);
    bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(parse_mlp(bad), FormatError);

    MlpModel zero_scale = m;
    zero_scale.feature_norm[1].scale = 0.0;
    CHECK_THROWS_AS(zero_scale.validate(), FormatError);
}

TEST_CASE("GOP features only look inside their window") {
    std::mt19937 rng(45);
    VideoSequence a;
    for (int i = 0; i < 12; ++i)
        a.frames.push_back(vistra::testing::natural_frame(rng, 32, 32, 10, ChromaFormat::C420));
    VideoSequence b = a;
    b.frames[3] = vistra::testing::random_frame(rng, 32, 32, 10, ChromaFormat::C420);
    b.frames[8] = vistra::testing::random_frame(rng, 32, 32, 10, ChromaFormat::C420);

    const QroFeatures fa = gop_features(a, 4, 4, 32.0);
    const QroFeatures fb = gop_features(b, 4, 4, 32.0);
    CHECK(fa.srqm_mean == fb.srqm_mean);
    CHECK(fa.ti_mean == fb.ti_mean);
    CHECK(fa.qp_base == 32.0);
    CHECK(gop_features(a, 0, 4, 32.0).ti_mean != gop_features(b, 0, 4, 32.0).ti_mean);
    CHECK_THROWS_AS(gop_features(a, 10, 4, 32.0), ConfigError);
}

TEST_CASE("static GOP has zero temporal information") {
    VideoSequence v;
    std::mt19937 rng(46);
    const Frame f = vistra::testing::natural_frame(rng, 32, 32, 10, ChromaFormat::C420);
    for (int i = 0; i < 5; ++i)
        v.frames.push_back(f);
    const QroFeatures q = gop_features(v, 0, 5, 22.0);
    CHECK(q.ti_mean == 0.0);
    CHECK(q.srqm_mean > 0.0);
    CHECK(q.srqm_mean <= 1.0);
}

} // TEST_SUITE
