// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vistra/bytes.hpp"
#include "vistra/cnn.hpp"
#include "vistra/metrics.hpp"
#include "vistra/pipeline.hpp"
#include "vistra/process.hpp"
#include "vistra/resampler.hpp"
#include "vistra/video_io.hpp"

using namespace vistra;

namespace {

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail << "failed: " << what << "; ";
        }
    }
};

int failures = 0;

void criterion(const std::string& name, double time_limit_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail << "exception: " << e.what() << "; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_limit_s > 0 && secs > time_limit_s) {
        o.ok = false;
        o.detail << "runtime over " << time_limit_s << " s; ";
    }
    std::printf("[%s] %s: %s(%.2f s)\n", o.ok ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!o.ok)
        ++failures;
}

double luma_psnr(const VideoSequence& a, const VideoSequence& b) { return metrics::psnr_luma_sequence(a, b); }

int worst_luma_error(const VideoSequence& a, const VideoSequence& b) {
    int worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, vistra::testing::max_abs_diff(a.frames[i].luma(), b.frames[i].luma()));
    return worst;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

} // namespace

int main() {
    criterion("Filter oracles", 10.0, [](Outcome& o) {
        double worst = 0.0;
        // 2-D impulse responses, down and up, against the kernel formula (borders included).
        for (auto [x0, y0] : {std::pair{0, 0}, std::pair{1, 5}, std::pair{7, 20}, std::pair{23, 23}, std::pair{46, 31}}) {
            Plane p(48, 32, 0);
            p.at(x0, y0) = 1000;
            const auto down = filter_plane(p, make_lanczos3_downsample(48, 24), make_lanczos3_downsample(32, 16));
            for (int oy = 0; oy < 16; ++oy)
                for (int ox = 0; ox < 24; ++ox) {
                    const double e = 1000.0 * oracle::axis_weights(48, ox, true)[x0] * oracle::axis_weights(32, oy, true)[y0];
                    worst = std::max(worst, std::abs(down[oy * 24 + ox] - e));
                }
            const auto up = filter_plane(p, make_lanczos3_upsample(48, 96), make_lanczos3_upsample(32, 64));
            for (int oy = 0; oy < 64; ++oy)
                for (int ox = 0; ox < 96; ++ox) {
                    const double e = 1000.0 * oracle::axis_weights(48, ox, false)[x0] * oracle::axis_weights(32, oy, false)[y0];
                    worst = std::max(worst, std::abs(up[oy * 96 + ox] - e));
                }
        }
        o.require(worst < 1e-6, "impulse response");
        o.detail << "impulse max err " << fmt(worst) << "; ";

        for (auto chroma : {ChromaFormat::C420, ChromaFormat::C444}) {
            const Frame c = vistra::testing::constant_frame(48, 32, 10, chroma, 123, 789);
            o.require(lanczos3_downsample_2x(c) == vistra::testing::constant_frame(24, 16, 10, chroma, 123, 789),
                      "constant down");
            o.require(lanczos3_upsample_2x(c) == vistra::testing::constant_frame(96, 64, 10, chroma, 123, 789), "constant up");
        }

        std::mt19937 rng(101);
        double sep = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Frame f = vistra::testing::random_frame(rng, 16, 16, 10, ChromaFormat::C444);
            const auto d = filter_plane(f.luma(), make_lanczos3_downsample(16, 8), make_lanczos3_downsample(16, 8));
            const auto dr = oracle::resample_direct_2d(f.luma(), 8, 8, true);
            const auto u = filter_plane(f.luma(), make_lanczos3_upsample(16, 32), make_lanczos3_upsample(16, 32));
            const auto ur = oracle::resample_direct_2d(f.luma(), 32, 32, false);
            for (std::size_t k = 0; k < d.size(); ++k)
                sep = std::max(sep, std::abs(d[k] - dr[k]));
            for (std::size_t k = 0; k < u.size(); ++k)
                sep = std::max(sep, std::abs(u[k] - ur[k]));
        }
        o.require(sep < 1e-6, "separable vs 2-D");
        o.detail << "separable max err " << fmt(sep) << " over 100 frames ";
    });

    criterion("EBD bound", 1.0, [](Outcome& o) {
        for (int b : {1, 2}) {
            Frame f(1024, 1, 10, ChromaFormat::C444);
            for (int v = 0; v < 1024; ++v)
                for (Plane& p : f.planes)
                    p.samples[v] = static_cast<Sample>(v);
            const Frame r = ebd_upshift(ebd_downshift(f, b), b);
            int worst = 0;
            for (int v = 0; v < 1024; ++v)
                worst = std::max(worst, std::abs(v - static_cast<int>(r.luma().samples[v])));
            o.require(worst <= (1 << b) - 1, "b=" + std::to_string(b));
            o.detail << "b=" << b << " max err " << worst << "; ";
        }
    });

    criterion("Architecture identity", 60.0, [](Outcome& o) {
        const cnn::ModelWeights zero = cnn::ModelWeights::zeros(cnn::NetworkSpec{});
        std::mt19937 rng(102);
        int exact = 0;
        for (int i = 0; i < 50; ++i) {
            const Tensor3 b = vistra::testing::random_block(rng, 3, 96);
            exact += cnn::network_forward(zero, b) == b;
        }
        o.require(exact == 50, "zero network not identity");
        o.detail << exact << "/50 blocks exact; ";
        const Frame f = vistra::testing::natural_frame(rng, 192, 128, 10, ChromaFormat::C420);
        const int err = vistra::testing::max_abs_diff(cnn::reconstruct_frame(f, zero).luma(), f.luma());
        o.require(err <= 2, "tiled reconstruction");
        o.detail << "tiled 192x128 max luma err " << err << " ";
    });

    criterion("CNN oracle equivalence", 0.0, [](Outcome& o) {
        std::mt19937 rng(103);
        std::normal_distribution<float> w(0.0f, 0.3f);
        std::uniform_real_distribution<float> a(0.0f, 0.5f);
        cnn::ModelWeights m = cnn::ModelWeights::zeros(cnn::NetworkSpec{1, 2, 3, 1, 3});
        for (cnn::ConvParams* c : {&m.head_conv, &m.blocks[0].conv1, &m.blocks[0].conv2, &m.post_blocks_conv, &m.tail_conv}) {
            for (float& v : c->weights)
                v = w(rng);
            for (float& v : c->bias)
                v = w(rng);
        }
        for (cnn::PReluParams* p : {&m.head_prelu, &m.blocks[0].prelu})
            for (float& v : p->alpha)
                v = a(rng);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const Tensor3 b = vistra::testing::random_block(rng, 3, 24);
            const Tensor3 out = cnn::network_forward(m, b);
            const auto ref = oracle::network_naive(m, oracle::to_volume(b));
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < 24; ++y)
                    for (int x = 0; x < 24; ++x)
                        worst = std::max(worst, std::abs(out.at(c, y, x) - ref[c][y][x]));
        }
        o.require(worst < 1e-5, "max error");
        o.detail << "20 blocks, max err " << fmt(worst) << " ";
    });

    criterion("Model selection", 0.0, [](Outcome& o) {
        const std::pair<double, int> table[] = {{22, 22}, {24.5, 22}, {24.6, 27}, {27, 27}, {29.5, 27}, {32, 32},
                                                {34.5, 32}, {37, 37}, {39.4, 37}, {39.5, 37}, {42, 42}, {50, 42}};
        int hits = 0;
        for (auto [qp, g] : table)
            hits += cnn::select_model(qp, "HM", cnn::AdaptationVersion::EBD).qp_group == g;
        o.require(hits == 12, "table mismatch");
        o.detail << hits << "/12 QPs ";
    });

    criterion("QP offsets in encode logs", 60.0, [](Outcome& o) {
        vistra::testing::TempDir dir("accept_qp");
        std::mt19937 rng(104);
        VideoSequence v;
        v.frame_rate = 8.0;
        for (int i = 0; i < 24; ++i)
            v.frames.push_back(vistra::testing::natural_frame(rng, 64, 48, 10, ChromaFormat::C420));
        write_raw_video(v, dir / "in.yuv");
        for (auto [mode, offset] : {std::pair{"ebd", -6}, std::pair{"sr-ebd", -12}}) {
            for (double qp : {22.0, 37.0}) {
                const auto r = run_shell(std::string(VISTRA_CLI_PATH) + " encode " + (dir / "in.yuv").string() +
                                         " --width 64 --height 48 --bitdepth 10 --fps 8 --gop 4 --qp " + fmt(qp) +
                                         " --adapter-encode 'cp {input} {output}' --force-mode " + mode + " --out " +
                                         (dir / "s.bin").string());
                o.require(r.exit_code == 0, "encode run: " + r.err);
                if (r.exit_code != 0)
                    return;
                const auto log = nlohmann::json::parse(r.out);
                int good = 0;
                for (const auto& s : log["segments"])
                    good += s["qp_offset"] == offset && s["qp"] == qp + offset;
                o.require(good == static_cast<int>(log["segments"].size()) && good > 0, std::string(mode) + " offsets");
                o.detail << mode << "@" << qp << ": " << good << "/" << log["segments"].size() << " segments at "
                         << offset << "; ";
            }
        }
    });

    criterion("BD oracle", 1.0, [](Outcome& o) {
        const std::vector<metrics::RdPoint> anchor{{1000, 30.0}, {2000, 33.5}, {4000, 36.2}, {8000, 38.4}};
        auto shifted = [&](double rf, double dq) {
            std::vector<metrics::RdPoint> t;
            for (auto p : anchor)
                t.push_back({p.bitrate_kbps * rf, p.quality + dq});
            return t;
        };
        auto to_o = [](const std::vector<metrics::RdPoint>& v) {
            std::vector<oracle::Rd> r;
            for (auto p : v)
                r.push_back({p.bitrate_kbps, p.quality});
            return r;
        };
        const metrics::RdCurve a(anchor);
        const double same_r = metrics::bd_metric(a, a, metrics::BdKind::BD_RATE).value;
        const double same_q = metrics::bd_metric(a, a, metrics::BdKind::BD_QUALITY).value;
        o.require(std::abs(same_r) < 1e-9 && std::abs(same_q) < 1e-9, "identical curves");

        const double half = metrics::bd_metric(a, metrics::RdCurve(shifted(0.5, 0.0)), metrics::BdKind::BD_RATE).value;
        const double half_o = oracle::bd_rate_numeric(to_o(anchor), to_o(shifted(0.5, 0.0)));
        o.require(std::abs(half + 50.0) <= 0.1, "half rate");
        o.require(std::abs(half - half_o) < 1e-3, "half rate vs numeric");

        const double gain = metrics::bd_metric(a, metrics::RdCurve(shifted(1.0, 1.0)), metrics::BdKind::BD_QUALITY).value;
        const double gain_o = oracle::bd_quality_numeric(to_o(anchor), to_o(shifted(1.0, 1.0)));
        o.require(std::abs(gain - 1.0) <= 0.01, "+1 dB");
        o.require(std::abs(gain - gain_o) < 1e-3, "+1 dB vs numeric");
        o.detail << "identical " << fmt(same_r) << "% / " << fmt(same_q) << " dB; half-rate " << half << "% (numeric "
                 << half_o << "); +1 dB -> " << gain << " dB (numeric " << gain_o << ") ";
    });

    criterion("End-to-end with identity adapter", 60.0, [](Outcome& o) {
        vistra::testing::TempDir dir("accept_e2e");
        std::mt19937 rng(105);
        VideoSequence natural, ramp;
        natural.frame_rate = ramp.frame_rate = 30.0;
        for (int i = 0; i < 64; ++i) {
            natural.frames.push_back(vistra::testing::natural_frame(rng, 192, 128, 10, ChromaFormat::C420));
            ramp.frames.push_back(vistra::testing::ramp_frame(192, 128, 10, ChromaFormat::C420, i % 8));
        }
        const auto adapter = vistra::testing::identity_adapter();
        pipeline::DecodeOptions baseline;
        baseline.cnn_enabled = false;
        baseline.workdir = dir.path();

        const auto e1 = pipeline::encode_video(natural, 32, adapter, nullptr, {16, pipeline::ForceMode::EbdOnly, {}, dir.path()});
        const auto d1 = pipeline::decode_video(e1.stream, adapter, nullptr, 32, baseline);
        const int err = worst_luma_error(natural, d1.video);
        o.require(d1.video.size() == 64 && err <= 1, "EBD-only luma error");
        o.detail << "EBD-only max luma err " << err << "; ";

        const auto e2 = pipeline::encode_video(ramp, 32, adapter, nullptr, {16, pipeline::ForceMode::SrEbd, {}, dir.path()});
        const auto d2 = pipeline::decode_video(e2.stream, adapter, nullptr, 32, baseline);
        const double psnr = luma_psnr(ramp, d2.video);
        o.require(psnr >= 40.0, "SR ramp PSNR");
        o.detail << "SR ramp Lanczos3 baseline " << fmt(psnr) << " dB; ";

        cnn::ModelBank bank;
        bank[{"HM", cnn::AdaptationVersion::SR_EBD, 32}] = cnn::ModelWeights::zeros(cnn::NetworkSpec{});
        pipeline::DecodeOptions pre = baseline;
        pre.cnn_enabled = true;
        pre.lanczos_pre_upsample = true;
        const auto d3 = pipeline::decode_video(e2.stream, adapter, &bank, 32, pre);
        const double psnr3 = luma_psnr(ramp, d3.video);
        o.require(psnr3 >= 40.0, "SR ramp PSNR, Lanczos3 pre-upsampling + zero CNN");
        o.detail << "Lanczos3 pre-upsample + zero CNN " << fmt(psnr3) << " dB; 64 frames 192x128 ";
    });

    criterion("Container roundtrip", 0.0, [](Outcome& o) {
        std::mt19937 rng(106);
        int ok = 0, mixed = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<pipeline::StreamSegment> segs(1 + rng() % 6);
            bool any_sr = false, any_ebd = false;
            for (auto& s : segs) {
                s.header.sr_flag = rng() % 2;
                any_sr |= s.header.sr_flag;
                any_ebd |= !s.header.sr_flag;
                s.header.width = 2 * (1 + rng() % 2000);
                s.header.height = 2 * (1 + rng() % 2000);
                s.header.frame_count = 1 + rng() % 1000;
                s.header.frame_rate_num = 1 + rng() % 120000;
                s.header.frame_rate_den = 1 + rng() % 1001;
                s.header.coding_bit_depth = static_cast<std::uint8_t>(8 + rng() % 9);
                s.payload.resize(rng() % 5000);
                for (auto& b : s.payload)
                    b = static_cast<std::uint8_t>(rng());
                s.header.payload_length = s.payload.size();
            }
            mixed += any_sr && any_ebd;
            ok += pipeline::parse_stream(pipeline::serialize_stream(segs)) == segs;
        }
        o.require(ok == 100, "roundtrip mismatch");
        o.detail << ok << "/100 streams identical (" << mixed << " with mixed flags) ";
    });

    criterion("Segmentation", 0.0, [](Outcome& o) {
        std::mt19937 rng(107);
        int ok = 0, total_runs = 0;
        for (double fps : {24.0, 30.0, 60.0}) {
            const auto min_len = static_cast<std::size_t>(std::ceil(fps));
            for (int trial = 0; trial < 200; ++trial, ++total_runs) {
                const std::size_t gop = 1 + rng() % 32;
                const std::size_t n = 1 + rng() % 60;
                auto d = std::make_unique<bool[]>(n);
                for (std::size_t i = 0; i < n; ++i)
                    d[i] = rng() % 2;
                const std::size_t total = (n - 1) * gop + 1 + rng() % gop;
                const auto segs = pipeline::segment_sequence(std::span<const bool>(d.get(), n), gop, fps, total);
                bool good = !segs.empty();
                std::size_t pos = 0;
                for (std::size_t i = 0; i < segs.size(); ++i) {
                    good = good && segs[i].start_frame == pos && segs[i].length > 0;
                    if (i + 1 < segs.size())
                        good = good && segs[i].length >= min_len;
                    pos += segs[i].length;
                }
                ok += good && pos == total;
            }
        }
        o.require(ok == total_runs, "partition / duration");
        o.detail << ok << "/" << total_runs << " sequences valid at 24/30/60 fps ";
    });

    std::printf("%s: %d failed\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED", failures);
    return failures ? 1 : 0;
}
