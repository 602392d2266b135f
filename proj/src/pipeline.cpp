#include "vistra/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include "vistra/bytes.hpp"
#include "vistra/error.hpp"
#include "vistra/process.hpp"
#include "vistra/resampler.hpp"
#include "vistra/video_io.hpp"

namespace vistra::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr char stream_magic[4] = {'V', 'S', 'G', '2'};

std::string format_number(double v) {
    char buf[32];
    if (v == std::floor(v) && std::abs(v) < 1e15)
        std::snprintf(buf, sizeof buf, "%.0f", v);
    else
        std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, i, ext);
    return buf;
}

// Re-throws `e` with the segment index prepended, keeping its error kind.
[[noreturn]] void rethrow_for_segment(std::size_t segment, const Error& e) {
    const std::string msg = "segment " + std::to_string(segment) + ": " + e.what();
    switch (e.kind()) {
    case ErrorKind::adapter:
        throw AdapterError(msg);
    case ErrorKind::format:
        throw FormatError(msg);
    default:
        throw ConfigError(msg);
    }
}

void remove_quietly(const fs::path& p) {
    std::error_code ec;
    fs::remove(p, ec);
}

} // namespace

const char* to_string(AdaptationMode m) { return m == AdaptationMode::EBD_ONLY ? "EBD_ONLY" : "SR_EBD"; }

double apply_qp_offset(double qp_base, AdaptationMode mode, const QpRange& range) {
    const int offset = mode == AdaptationMode::EBD_ONLY ? qp_offset_ebd : qp_offset_sr_ebd;
    return std::clamp(qp_base + offset, range.min, range.max);
}

std::vector<Segment> segment_sequence(std::span<const bool> decisions, std::size_t gop_len, double frame_rate,
                                      std::optional<std::size_t> total_frames) {
    if (decisions.empty())
        throw ConfigError("segmentation needs at least one GOP decision");
    if (gop_len == 0)
        throw ConfigError("GOP length must be positive");
    if (!(frame_rate > 0.0))
        throw ConfigError("frame rate must be positive");
    const std::size_t n = decisions.size();
    const std::size_t total = total_frames.value_or(n * gop_len);
    if (total <= (n - 1) * gop_len || total > n * gop_len)
        throw ConfigError("frame count " + std::to_string(total) + " inconsistent with " + std::to_string(n) +
                          " GOPs of " + std::to_string(gop_len));
    const auto min_len = static_cast<std::size_t>(std::ceil(frame_rate));

    // Maximal runs of equal decisions.
    std::vector<Segment> runs;
    for (std::size_t g = 0; g < n; ++g) {
        const std::size_t start = g * gop_len;
        const std::size_t len = std::min(gop_len, total - start);
        if (!runs.empty() && runs.back().sr_flag == decisions[g])
            runs.back().length += len;
        else
            runs.push_back({start, len, decisions[g]});
    }

    std::vector<Segment> segments;
    for (const Segment& run : runs) {
        if (segments.empty()) {
            segments.push_back(run);
            continue;
        }
        Segment& cur = segments.back();
        if (cur.length < min_len || run.length < min_len || run.sr_flag == cur.sr_flag)
            cur.length += run.length;
        else
            segments.push_back(run);
    }
    if (segments.size() > 1 && segments.back().length < min_len) {
        const std::size_t tail = segments.back().length;
        segments.pop_back();
        segments.back().length += tail;
    }
    return segments;
}

std::pair<std::uint32_t, std::uint32_t> frame_rate_fraction(double fps) {
    if (!(fps > 0.0) || fps > 1e6)
        throw ConfigError("frame rate out of range");
    if (std::abs(fps - std::round(fps)) < 1e-9)
        return {static_cast<std::uint32_t>(std::round(fps)), 1};
    const double ntsc = fps * 1.001;
    if (std::abs(ntsc - std::round(ntsc)) < 1e-6)
        return {static_cast<std::uint32_t>(std::round(ntsc) * 1000), 1001};
    auto num = static_cast<std::uint32_t>(std::round(fps * 1000.0));
    std::uint32_t den = 1000;
    const std::uint32_t g = std::gcd(num, den);
    return {num / g, den / g};
}

std::vector<std::uint8_t> serialize_stream(std::span<const StreamSegment> segments) {
    ByteWriter w;
    for (const StreamSegment& s : segments) {
        const SegmentHeader& h = s.header;
        w.text(std::string(stream_magic, 4));
        w.u8(h.sr_flag ? 1 : 0);
        w.u32(h.width);
        w.u32(h.height);
        w.u32(h.frame_count);
        w.u32(h.frame_rate_num);
        w.u32(h.frame_rate_den);
        w.u8(h.coding_bit_depth);
        w.u64(s.payload.size());
        w.bytes(s.payload);
    }
    return w.take();
}

std::vector<StreamSegment> parse_stream(std::span<const std::uint8_t> bytes) {
    std::vector<StreamSegment> out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const std::size_t index = out.size();
        try {
            ByteReader r(bytes.subspan(pos), "header");
            if (r.text(4) != std::string(stream_magic, 4))
                throw FormatError("bad magic (expected \"VSG2\")");
            StreamSegment s;
            const std::uint8_t flags = r.u8();
            if (flags & 0xfe)
                throw FormatError("reserved header bits set");
            s.header.sr_flag = flags & 1;
            s.header.width = r.u32();
            s.header.height = r.u32();
            s.header.frame_count = r.u32();
            s.header.frame_rate_num = r.u32();
            s.header.frame_rate_den = r.u32();
            s.header.coding_bit_depth = r.u8();
            s.header.payload_length = r.u64();
            if (s.header.width == 0 || s.header.height == 0 || s.header.frame_count == 0)
                throw FormatError("empty segment geometry");
            if (s.header.frame_rate_num == 0 || s.header.frame_rate_den == 0)
                throw FormatError("zero frame rate");
            if (s.header.coding_bit_depth < 2 || s.header.coding_bit_depth > 16)
                throw FormatError("coding bit depth " + std::to_string(s.header.coding_bit_depth) + " out of range");
            if (s.header.sr_flag && (s.header.width % 2 || s.header.height % 2))
                throw FormatError("SR segment with odd dimensions");
            if (r.remaining() < s.header.payload_length)
                throw FormatError("payload truncated: header declares " + std::to_string(s.header.payload_length) +
                                  " bytes, " + std::to_string(r.remaining()) + " remain");
            auto payload = r.bytes(static_cast<std::size_t>(s.header.payload_length));
            s.payload.assign(payload.begin(), payload.end());
            pos += r.position();
            out.push_back(std::move(s));
        } catch (const Error& e) {
            rethrow_for_segment(index, e);
        }
    }
    if (out.empty())
        throw FormatError("stream contains no segments");
    return out;
}

void CodecAdapter::validate() const {
    if (encode_command.empty() && decode_command.empty())
        throw ConfigError("codec adapter has no command templates");
    for (const auto* tmpl : {&encode_command, &decode_command}) {
        const char* which = tmpl == &encode_command ? "encode" : "decode";
        if (tmpl->empty())
            continue;
        for (const char* name : {"input", "output"})
            if (count_placeholder(*tmpl, name) != 1)
                throw ConfigError(std::string(which) + " template must contain {" + name + "} exactly once");
        for (const char* name : {"qp", "width", "height", "fps", "bitdepth"})
            if (count_placeholder(*tmpl, name) > 1)
                throw ConfigError(std::string(which) + " template contains {" + name + "} more than once");
    }
    if (codec_id.empty() || codec_id.size() > 255)
        throw ConfigError("codec id must be 1..255 bytes");
}

void run_adapter(const std::string& command_template, const AdapterInvocation& inv) {
    const std::string cmd = expand_template(command_template, {{"input", inv.input.string()},
                                                               {"output", inv.output.string()},
                                                               {"qp", format_number(inv.qp)},
                                                               {"width", std::to_string(inv.width)},
                                                               {"height", std::to_string(inv.height)},
                                                               {"fps", format_number(inv.fps)},
                                                               {"bitdepth", std::to_string(inv.bit_depth)}});
    const ProcessResult r = run_shell(cmd);
    if (r.exit_code != 0) {
        std::string err = r.err;
        while (!err.empty() && (err.back() == '\n' || err.back() == '\r'))
            err.pop_back();
        throw AdapterError("host codec command exited with " + std::to_string(r.exit_code) + " [" + cmd + "]" +
                           (err.empty() ? "" : ": " + err));
    }
    if (!fs::exists(inv.output))
        throw AdapterError("host codec command produced no output file [" + cmd + "]");
}

EncodeResult encode_video(const VideoSequence& video, double qp_base, const CodecAdapter& adapter,
                          const qro::MlpModel* qro_model, const EncodeOptions& options) {
    adapter.validate();
    if (adapter.encode_command.empty())
        throw ConfigError("no encode command template given");
    if (video.empty())
        throw ConfigError("cannot encode an empty video");
    video.validate();
    if (options.gop_len == 0)
        throw ConfigError("GOP length must be positive");
    const Frame& f0 = video.frames.front();
    if (f0.effective_bit_depth != f0.coding_bit_depth)
        throw ConfigError("encoder input must use its full coding bit depth");
    if (f0.coding_bit_depth < 2)
        throw ConfigError("coding bit depth too small for bit-depth adaptation");
    const bool can_halve = f0.width % 2 == 0 && f0.height % 2 == 0;
    if (options.force == ForceMode::SrEbd && !can_halve)
        throw ConfigError("SR adaptation needs even frame dimensions");
    if (options.force == ForceMode::Auto && !qro_model)
        throw ConfigError("automatic mode needs a QRO model");
    std::error_code ec;
    fs::create_directories(options.workdir, ec);

    EncodeResult result;
    const std::size_t total = video.size();
    const std::size_t n_gops = (total + options.gop_len - 1) / options.gop_len;
    auto decisions = std::make_unique<bool[]>(n_gops);
    for (std::size_t g = 0; g < n_gops; ++g) {
        GopRecord rec;
        rec.index = g;
        rec.start_frame = g * options.gop_len;
        rec.length = std::min(options.gop_len, total - rec.start_frame);
        if (options.force == ForceMode::Auto && can_halve) {
            rec.features = qro::gop_features(video, rec.start_frame, rec.length, qp_base);
            rec.probability = qro::mlp_forward(*qro_model, *rec.features);
            rec.decision = *rec.probability >= 0.5;
        } else {
            rec.decision = options.force == ForceMode::SrEbd;
        }
        decisions[g] = rec.decision;
        result.gops.push_back(rec);
    }

    const auto segments = segment_sequence(std::span<const bool>(decisions.get(), n_gops), options.gop_len,
                                           video.frame_rate, total);
    const auto [rate_num, rate_den] = frame_rate_fraction(video.frame_rate);

    std::vector<StreamSegment> stream;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment& seg = segments[i];
        try {
            SegmentRecord rec;
            rec.index = i;
            rec.segment = seg;
            rec.mode = seg.sr_flag ? AdaptationMode::SR_EBD : AdaptationMode::EBD_ONLY;
            rec.qp_base = qp_base;
            rec.qp_offset = seg.sr_flag ? qp_offset_sr_ebd : qp_offset_ebd;
            rec.qp = apply_qp_offset(qp_base, rec.mode, options.qp_range);

            VideoSequence coded;
            coded.frame_rate = video.frame_rate;
            coded.frames.reserve(seg.length);
            for (std::size_t f = seg.start_frame; f < seg.start_frame + seg.length; ++f) {
                const Frame& src = video.frames[f];
                coded.frames.push_back(ebd_downshift(seg.sr_flag ? lanczos3_downsample_2x(src) : src, 1));
            }
            rec.coded_width = coded.frames.front().width;
            rec.coded_height = coded.frames.front().height;

            const fs::path raw = options.workdir / numbered("encode", i, ".yuv");
            const fs::path bits = options.workdir / numbered("encode", i, ".bin");
            remove_quietly(bits);
            write_raw_video(coded, raw);
            run_adapter(adapter.encode_command, {raw, bits, rec.qp, rec.coded_width, rec.coded_height,
                                                 video.frame_rate, f0.coding_bit_depth});
            StreamSegment out;
            out.payload = read_file_bytes(bits.string());
            remove_quietly(raw);
            remove_quietly(bits);

            out.header.sr_flag = seg.sr_flag;
            out.header.width = static_cast<std::uint32_t>(f0.width);
            out.header.height = static_cast<std::uint32_t>(f0.height);
            out.header.frame_count = static_cast<std::uint32_t>(seg.length);
            out.header.frame_rate_num = rate_num;
            out.header.frame_rate_den = rate_den;
            out.header.coding_bit_depth = static_cast<std::uint8_t>(f0.coding_bit_depth);
            out.header.payload_length = out.payload.size();
            rec.payload_bytes = out.payload.size();
            stream.push_back(std::move(out));
            result.segments.push_back(rec);
        } catch (const Error& e) {
            rethrow_for_segment(i, e);
        }
    }
    result.stream = serialize_stream(stream);
    return result;
}

DecodeResult decode_video(std::span<const std::uint8_t> stream, const CodecAdapter& adapter, const cnn::ModelBank* bank,
                          double qp_base, const DecodeOptions& options) {
    adapter.validate();
    if (adapter.decode_command.empty())
        throw ConfigError("no decode command template given");
    if (options.cnn_enabled && !bank)
        throw ConfigError("CNN reconstruction needs a weight bank");
    const std::vector<StreamSegment> segments = parse_stream(stream);
    std::error_code ec;
    fs::create_directories(options.workdir, ec);

    DecodeResult result;
    result.video.frame_rate = segments.front().header.frame_rate();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const SegmentHeader& h = segments[i].header;
        try {
            const int cbd = h.coding_bit_depth;
            const int coded_w = static_cast<int>(h.sr_flag ? h.width / 2 : h.width);
            const int coded_h = static_cast<int>(h.sr_flag ? h.height / 2 : h.height);

            const fs::path bits = options.workdir / numbered("decode", i, ".bin");
            const fs::path raw = options.workdir / numbered("decode", i, ".yuv");
            remove_quietly(raw);
            write_file_bytes(bits.string(), segments[i].payload);
            run_adapter(adapter.decode_command, {bits, raw, qp_base, coded_w, coded_h, h.frame_rate(), cbd});
            VideoSequence decoded = read_raw_video(raw, coded_w, coded_h, cbd, options.chroma, h.frame_rate());
            remove_quietly(bits);
            remove_quietly(raw);
            if (decoded.size() != h.frame_count)
                throw FormatError("host decoder produced " + std::to_string(decoded.size()) + " frames, header declares " +
                                  std::to_string(h.frame_count));

            DecodeSegmentRecord rec;
            rec.index = i;
            rec.sr_flag = h.sr_flag;
            rec.frame_count = h.frame_count;
            rec.path = options.cnn_enabled ? "cnn" : "baseline";
            const cnn::ModelWeights* model = nullptr;
            if (options.cnn_enabled) {
                rec.model = cnn::select_model(qp_base, adapter.codec_id,
                                              h.sr_flag ? cnn::AdaptationVersion::SR_EBD : cnn::AdaptationVersion::EBD);
                const auto it = bank->find(*rec.model);
                if (it == bank->end())
                    throw ConfigError("weight bank has no model " + cnn::to_string(*rec.model));
                model = &it->second;
            }

            for (Frame& f : decoded.frames) {
                // Coding noise may push samples past the reduced range.
                f.effective_bit_depth = cbd - 1;
                for (Plane& p : f.planes)
                    for (Sample& s : p.samples)
                        s = std::min(s, f.max_value());

                Frame out;
                if (options.cnn_enabled) {
                    Frame up = f;
                    if (h.sr_flag)
                        up = options.lanczos_pre_upsample ? lanczos3_upsample_2x(f) : nearest_upsample_2x(f);
                    out = cnn::reconstruct_frame(up, *model, options.tiling);
                } else {
                    out = ebd_upshift(f, 1);
                    if (h.sr_flag)
                        out = lanczos3_upsample_2x(out);
                }
                result.video.frames.push_back(std::move(out));
            }
            result.segments.push_back(std::move(rec));
        } catch (const Error& e) {
            rethrow_for_segment(i, e);
        }
    }
    return result;
}

} // namespace vistra::pipeline
