#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vistra/cnn.hpp"
#include "vistra/frame.hpp"
#include "vistra/qro.hpp"

namespace vistra::pipeline {

// Bit-depth adaptation runs in both modes; SR_EBD also halves resolution.
enum class AdaptationMode { EBD_ONLY, SR_EBD };

const char* to_string(AdaptationMode m);

inline constexpr int qp_offset_ebd = -6;
inline constexpr int qp_offset_sr_ebd = -12;

struct QpRange {
    double min = 0.0;
    double max = 63.0;
};

// qp_base plus the mode's fixed offset, clamped to the host range.
double apply_qp_offset(double qp_base, AdaptationMode mode, const QpRange& range = {});

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

struct Segment {
    std::size_t start_frame = 0;
    std::size_t length = 0;
    bool sr_flag = false;

    bool operator==(const Segment&) const = default;
};

// Merges per-GOP decisions into segments of at least ceil(frame_rate)
// frames. Equal neighbours merge; a run shorter than that is absorbed by the
// segment before it (the first run absorbs forward instead). Only a sequence
// shorter than one second yields a shorter segment. `total_frames` defaults
// to decisions.size() * gop_len; the last GOP may be partial.
std::vector<Segment> segment_sequence(std::span<const bool> decisions, std::size_t gop_len, double frame_rate,
                                      std::optional<std::size_t> total_frames = std::nullopt);

// ---------------------------------------------------------------------------
// Container: one header per segment followed by the host bitstream.
//
//   "VSG2" | flags u8 (bit 0 = sr_flag, bits 1..7 reserved, zero) |
//   width u32 | height u32 | frame_count u32 | frame_rate_num u32 |
//   frame_rate_den u32 | coding_bit_depth u8 | payload_length u64
//
// Width and height are the original (pre-adaptation) dimensions.
// ---------------------------------------------------------------------------

inline constexpr std::size_t segment_header_bytes = 34;

struct SegmentHeader {
    bool sr_flag = false;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t frame_count = 0;
    std::uint32_t frame_rate_num = 30;
    std::uint32_t frame_rate_den = 1;
    std::uint8_t coding_bit_depth = 10;
    std::uint64_t payload_length = 0;

    double frame_rate() const { return static_cast<double>(frame_rate_num) / frame_rate_den; }

    bool operator==(const SegmentHeader&) const = default;
};

struct StreamSegment {
    SegmentHeader header;
    std::vector<std::uint8_t> payload;

    bool operator==(const StreamSegment&) const = default;
};

// payload_length is taken from the payload size.
std::vector<std::uint8_t> serialize_stream(std::span<const StreamSegment> segments);

// Parses the whole stream before returning; any defect throws FormatError
// naming the failing segment.
std::vector<StreamSegment> parse_stream(std::span<const std::uint8_t> bytes);

// Rational approximation of a frame rate (exact for integers and x/1.001 rates).
std::pair<std::uint32_t, std::uint32_t> frame_rate_fraction(double fps);

// ---------------------------------------------------------------------------
// Host codec adapter
// ---------------------------------------------------------------------------

// Shell command templates over raw files. Placeholders: {input} {output}
// (each required exactly once), {qp} {width} {height} {fps} {bitdepth}
// (each at most once). An empty template is allowed for a direction that is
// not used.
struct CodecAdapter {
    std::string encode_command;
    std::string decode_command;
    std::string codec_id = "HM";

    void validate() const;
};

struct AdapterInvocation {
    std::filesystem::path input;
    std::filesystem::path output;
    double qp = 0.0;
    int width = 0;
    int height = 0;
    double fps = 0.0;
    int bit_depth = 0;
};

// Expands and runs a template; throws AdapterError with stderr on failure.
void run_adapter(const std::string& command_template, const AdapterInvocation& inv);

// ---------------------------------------------------------------------------
// Encoder / decoder
// ---------------------------------------------------------------------------

enum class ForceMode { Auto, EbdOnly, SrEbd };

struct EncodeOptions {
    std::size_t gop_len = 16;
    ForceMode force = ForceMode::Auto;
    QpRange qp_range{};
    std::filesystem::path workdir = std::filesystem::temp_directory_path();
};

struct GopRecord {
    std::size_t index = 0;
    std::size_t start_frame = 0;
    std::size_t length = 0;
    std::optional<qro::QroFeatures> features; // absent when the mode is forced
    std::optional<double> probability;
    bool decision = false;
};

struct SegmentRecord {
    std::size_t index = 0;
    Segment segment;
    AdaptationMode mode = AdaptationMode::EBD_ONLY;
    double qp_base = 0.0;
    int qp_offset = 0;
    double qp = 0.0;
    int coded_width = 0;
    int coded_height = 0;
    std::size_t payload_bytes = 0;
};

struct EncodeResult {
    std::vector<std::uint8_t> stream;
    std::vector<GopRecord> gops;
    std::vector<SegmentRecord> segments;
};

// `qro_model` is required when options.force is Auto. Frames with odd
// dimensions cannot be halved and are always coded EBD-only.
EncodeResult encode_video(const VideoSequence& video, double qp_base, const CodecAdapter& adapter,
                          const qro::MlpModel* qro_model, const EncodeOptions& options);

struct DecodeOptions {
    bool cnn_enabled = true;
    // Pre-CNN spatial up-sampling with Lanczos3 instead of nearest neighbour.
    bool lanczos_pre_upsample = false;
    ChromaFormat chroma = ChromaFormat::C420;
    cnn::Tiling tiling{};
    std::filesystem::path workdir = std::filesystem::temp_directory_path();
};

struct DecodeSegmentRecord {
    std::size_t index = 0;
    bool sr_flag = false;
    std::size_t frame_count = 0;
    std::string path; // "cnn" or "baseline"
    std::optional<cnn::ModelKey> model;
};

struct DecodeResult {
    VideoSequence video;
    std::vector<DecodeSegmentRecord> segments;
};

// `bank` is required when options.cnn_enabled.
DecodeResult decode_video(std::span<const std::uint8_t> stream, const CodecAdapter& adapter, const cnn::ModelBank* bank,
                          double qp_base, const DecodeOptions& options);

} // namespace vistra::pipeline
