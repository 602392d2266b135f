// vistra: encode / decode / evaluate with a host codec behind shell templates.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vistra/bytes.hpp"
#include "vistra/error.hpp"
#include "vistra/metrics.hpp"
#include "vistra/pipeline.hpp"
#include "vistra/qro.hpp"
#include "vistra/video_io.hpp"
#include "vistra/weight_bank.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vistra;

namespace {

struct VideoArgs {
    int width = 0;
    int height = 0;
    int bitdepth = 10;
    double fps = 30.0;
    std::string chroma = "420";

    ChromaFormat chroma_format() const { return chroma == "444" ? ChromaFormat::C444 : ChromaFormat::C420; }
};

struct Config {
    VideoArgs video;
    double qp = 32.0;
    std::size_t gop = 16;
    std::string adapter_encode;
    std::string adapter_decode;
    std::string codec_id = "HM";
    std::string weights;
    std::string qro_model;
    std::string force_mode = "auto";
    bool no_cnn = false;
    bool baseline_upsample = false;
    int block_size = 96;
    int overlap = 4;
    std::string vmaf_cmd;
    std::string workdir;
    std::string out;
    std::string log;

    // evaluate
    std::string reference;
    std::string sequence;
    std::vector<std::string> runs;
    std::string qp_set = "both";
    std::string bd_out;

    std::string input;
};

void add_video_options(CLI::App& cmd, Config& c) {
    cmd.add_option("--width", c.video.width, "Frame width")->required()->check(CLI::PositiveNumber);
    cmd.add_option("--height", c.video.height, "Frame height")->required()->check(CLI::PositiveNumber);
    cmd.add_option("--bitdepth", c.video.bitdepth, "Coding bit depth")->check(CLI::Range(2, 16));
    cmd.add_option("--fps", c.video.fps, "Frame rate")->check(CLI::PositiveNumber);
    cmd.add_option("--chroma", c.video.chroma, "Chroma format")->check(CLI::IsMember({"420", "444"}));
}

// Removes a scratch directory on exit if this process created it.
class Workdir {
public:
    explicit Workdir(const std::string& requested) {
        if (!requested.empty()) {
            path_ = requested;
        } else {
            path_ = fs::temp_directory_path() / ("vistra_" + std::to_string(::getpid()));
            owned_ = true;
        }
        std::error_code ec;
        fs::create_directories(path_, ec);
        if (!fs::is_directory(path_))
            throw ConfigError("cannot create work directory " + path_.string());
    }
    ~Workdir() {
        if (owned_) {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
    }
    Workdir(const Workdir&) = delete;
    Workdir& operator=(const Workdir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    bool owned_ = false;
};

void emit_json(const json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!(f << text))
        throw ConfigError("cannot write log " + path);
}

pipeline::CodecAdapter make_adapter(const Config& c) { return {c.adapter_encode, c.adapter_decode, c.codec_id}; }

json features_json(const std::optional<qro::QroFeatures>& f) {
    if (!f)
        return nullptr;
    return {{"srqm_mean", f->srqm_mean}, {"ti_mean", f->ti_mean}, {"qp_base", f->qp_base}};
}

int cmd_encode(const Config& c) {
    if (c.out.empty())
        throw ConfigError("encode needs --out");
    const VideoSequence video =
        read_raw_video(c.input, c.video.width, c.video.height, c.video.bitdepth, c.video.chroma_format(), c.video.fps);

    pipeline::EncodeOptions opt;
    opt.gop_len = c.gop;
    opt.force = c.force_mode == "ebd"      ? pipeline::ForceMode::EbdOnly
                : c.force_mode == "sr-ebd" ? pipeline::ForceMode::SrEbd
                                           : pipeline::ForceMode::Auto;
    std::optional<qro::MlpModel> model;
    if (opt.force == pipeline::ForceMode::Auto) {
        if (c.qro_model.empty())
            throw ConfigError("--force-mode auto needs --qro-model");
        model = qro::load_mlp(c.qro_model);
    }
    const Workdir work(c.workdir);
    opt.workdir = work.path();

    const auto r = pipeline::encode_video(video, c.qp, make_adapter(c), model ? &*model : nullptr, opt);
    write_file_bytes(c.out, r.stream);

    json log;
    log["command"] = "encode";
    log["input"] = c.input;
    log["width"] = c.video.width;
    log["height"] = c.video.height;
    log["bitdepth"] = c.video.bitdepth;
    log["fps"] = c.video.fps;
    log["frames"] = video.size();
    log["qp_base"] = c.qp;
    log["gop_len"] = c.gop;
    log["force_mode"] = c.force_mode;
    log["codec_id"] = c.codec_id;
    json gops = json::array();
    for (const auto& g : r.gops)
        gops.push_back({{"index", g.index},
                        {"start_frame", g.start_frame},
                        {"length", g.length},
                        {"features", features_json(g.features)},
                        {"probability", g.probability ? json(*g.probability) : json(nullptr)},
                        {"decision", g.decision ? "SR_EBD" : "EBD_ONLY"}});
    log["gops"] = gops;
    json segs = json::array();
    for (const auto& s : r.segments)
        segs.push_back({{"index", s.index},
                        {"start_frame", s.segment.start_frame},
                        {"length", s.segment.length},
                        {"sr_flag", s.segment.sr_flag},
                        {"mode", pipeline::to_string(s.mode)},
                        {"qp_base", s.qp_base},
                        {"qp_offset", s.qp_offset},
                        {"qp", s.qp},
                        {"coded_width", s.coded_width},
                        {"coded_height", s.coded_height},
                        {"payload_bytes", s.payload_bytes}});
    log["segments"] = segs;
    log["stream_bytes"] = r.stream.size();
    emit_json(log, c.log);
    return 0;
}

int cmd_decode(const Config& c) {
    if (c.out.empty())
        throw ConfigError("decode needs --out");
    const auto stream = read_file_bytes(c.input);

    std::optional<cnn::ModelBank> bank;
    if (!c.no_cnn) {
        if (c.weights.empty())
            throw ConfigError("CNN reconstruction needs --weights (or pass --no-cnn)");
        bank = cnn::load_weight_bank(c.weights);
    }
    const Workdir work(c.workdir);
    pipeline::DecodeOptions opt;
    opt.cnn_enabled = !c.no_cnn;
    opt.lanczos_pre_upsample = c.baseline_upsample;
    opt.chroma = c.video.chroma_format();
    opt.tiling = {c.block_size, c.overlap};
    opt.workdir = work.path();

    const auto r = pipeline::decode_video(stream, make_adapter(c), bank ? &*bank : nullptr, c.qp, opt);
    write_raw_video(r.video, c.out);

    json log;
    log["command"] = "decode";
    log["input"] = c.input;
    log["qp_base"] = c.qp;
    log["codec_id"] = c.codec_id;
    log["cnn_enabled"] = !c.no_cnn;
    log["pre_upsample"] = c.baseline_upsample ? "lanczos3" : "nearest";
    log["frames"] = r.video.size();
    log["width"] = r.video.frames.front().width;
    log["height"] = r.video.frames.front().height;
    json segs = json::array();
    for (const auto& s : r.segments) {
        json j = {{"index", s.index}, {"sr_flag", s.sr_flag}, {"frame_count", s.frame_count}, {"path", s.path}};
        if (s.model) {
            j["model"] = cnn::to_string(*s.model);
            j["model_key"] = {{"codec", s.model->codec},
                              {"version", cnn::to_string(s.model->version)},
                              {"qp_group", s.model->qp_group}};
        } else {
            j["model"] = nullptr;
            j["baseline"] = "Lanczos3 + left shift";
        }
        segs.push_back(j);
    }
    log["segments"] = segs;
    emit_json(log, c.log);
    return 0;
}

struct Run {
    std::string label;
    double qp = 0.0;
    std::string decoded;
    std::string stream;
    double bitrate_kbps = 0.0;
    double psnr = 0.0;
    std::optional<double> vmaf;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    if (!s.empty() && s.back() == sep)
        out.emplace_back();
    return out;
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

int cmd_evaluate(const Config& c) {
    if (c.runs.empty())
        throw ConfigError("evaluate needs at least one --run LABEL,QP,DECODED,STREAM");
    if (c.out.empty())
        throw ConfigError("evaluate needs --out for the RD table");
    const auto chroma = c.video.chroma_format();
    const VideoSequence ref = read_raw_video(c.reference, c.video.width, c.video.height, c.video.bitdepth, chroma, c.video.fps);
    const std::string sequence = c.sequence.empty() ? fs::path(c.reference).stem().string() : c.sequence;

    std::vector<Run> runs;
    std::vector<std::string> labels;
    for (const std::string& spec : c.runs) {
        const auto f = split(spec, ',');
        if (f.size() != 4 || f[0].empty())
            throw ConfigError("--run expects LABEL,QP,DECODED,STREAM, got \"" + spec + "\"");
        Run r;
        r.label = f[0];
        try {
            std::size_t used = 0;
            r.qp = std::stod(f[1], &used);
            if (used != f[1].size())
                throw std::invalid_argument("qp");
        } catch (const std::exception&) {
            throw ConfigError("--run: bad QP \"" + f[1] + "\"");
        }
        r.decoded = f[2];
        r.stream = f[3];
        for (const Run& other : runs)
            if (other.label == r.label && other.qp == r.qp)
                throw ConfigError("--run: duplicate point " + r.label + " at QP " + f[1]);
        const VideoSequence dec = read_raw_video(r.decoded, c.video.width, c.video.height, c.video.bitdepth, chroma, c.video.fps);
        r.psnr = metrics::psnr_luma_sequence(ref, dec);
        std::error_code ec;
        const auto bytes = fs::file_size(r.stream, ec);
        if (ec)
            throw ConfigError("cannot stat stream " + r.stream);
        r.bitrate_kbps = static_cast<double>(bytes) * 8.0 / 1000.0 / (static_cast<double>(ref.size()) / c.video.fps);
        if (std::find(labels.begin(), labels.end(), r.label) == labels.end())
            labels.push_back(r.label);
        runs.push_back(r);
    }

    // VMAF failures are reported after the PSNR results are written.
    std::optional<AdapterError> vmaf_failure;
    bool have_vmaf = !c.vmaf_cmd.empty();
    if (have_vmaf) {
        try {
            for (Run& r : runs)
                r.vmaf = metrics::vmaf_external(c.reference, r.decoded, c.video.width, c.video.height, c.video.bitdepth,
                                                c.vmaf_cmd);
        } catch (const AdapterError& e) {
            vmaf_failure = e;
            have_vmaf = false;
            for (Run& r : runs)
                r.vmaf.reset();
        }
    }

    {
        std::ofstream csv(c.out, std::ios::binary);
        if (!csv)
            throw ConfigError("cannot write " + c.out);
        csv << "sequence,codec,qp,bitrate_kbps,psnr_db" << (have_vmaf ? ",vmaf" : "") << "\n";
        for (const Run& r : runs) {
            csv << sequence << ',' << r.label << ',' << fixed(r.qp, r.qp == std::floor(r.qp) ? 0 : 2) << ','
                << fixed(r.bitrate_kbps) << ',' << fixed(r.psnr);
            if (have_vmaf)
                csv << ',' << fixed(*r.vmaf);
            csv << "\n";
        }
    }

    std::vector<std::pair<std::string, std::vector<double>>> sets;
    if (c.qp_set == "low" || c.qp_set == "both")
        sets.push_back({"low", {22, 27, 32, 37}});
    if (c.qp_set == "high" || c.qp_set == "both")
        sets.push_back({"high", {27, 32, 37, 42}});
    if (c.qp_set == "all")
        sets.push_back({"all", {}});

    auto curve = [&](const std::string& label, const std::vector<double>& qps, bool vmaf) -> std::optional<metrics::RdCurve> {
        std::vector<metrics::RdPoint> pts;
        for (const Run& r : runs) {
            if (r.label != label)
                continue;
            if (!qps.empty() && std::find(qps.begin(), qps.end(), r.qp) == qps.end())
                continue;
            pts.push_back({r.bitrate_kbps, vmaf ? *r.vmaf : r.psnr});
        }
        if ((qps.empty() && pts.size() < 4) || (!qps.empty() && pts.size() != qps.size()))
            return std::nullopt;
        return metrics::RdCurve(pts, vmaf ? metrics::QualityMetric::VMAF : metrics::QualityMetric::PSNR);
    };

    std::ostringstream bd;
    bd << "anchor,test,qp_set,bd_rate_psnr_pct,bd_psnr_db" << (have_vmaf ? ",bd_rate_vmaf_pct,bd_vmaf" : "") << ",notes\n";
    const std::string& anchor = labels.front();
    for (const std::string& label : labels) {
        for (const auto& [set_name, qps] : sets) {
            const auto a = curve(anchor, qps, false), t = curve(label, qps, false);
            bd << anchor << ',' << label << ',' << set_name << ',';
            if (!a || !t) {
                bd << "n/a,n/a" << (have_vmaf ? ",n/a,n/a" : "") << ",incomplete QP set\n";
                continue;
            }
            std::vector<std::string> notes;
            // A degenerate curve pair (no overlap, flat quality) leaves that cell empty.
            auto pair = [&](const metrics::RdCurve& ac, const metrics::RdCurve& tc) {
                try {
                    const auto rate = metrics::bd_metric(ac, tc, metrics::BdKind::BD_RATE);
                    const auto qual = metrics::bd_metric(ac, tc, metrics::BdKind::BD_QUALITY);
                    notes.insert(notes.end(), rate.warnings.begin(), rate.warnings.end());
                    return fixed(rate.value) + "," + fixed(qual.value);
                } catch (const ConfigError& e) {
                    notes.push_back(e.what());
                    return std::string("n/a,n/a");
                }
            };
            bd << pair(*a, *t);
            if (have_vmaf)
                bd << ',' << pair(*curve(anchor, qps, true), *curve(label, qps, true));
            std::string joined;
            for (const auto& n : notes)
                joined += (joined.empty() ? "" : "; ") + n;
            for (char& ch : joined)
                if (ch == ',')
                    ch = ';';
            bd << ',' << joined << "\n";
        }
    }
    if (c.bd_out.empty()) {
        std::cout << bd.str();
    } else {
        std::ofstream f(c.bd_out, std::ios::binary);
        if (!(f << bd.str()))
            throw ConfigError("cannot write " + c.bd_out);
    }

    if (vmaf_failure)
        throw *vmaf_failure;
    return 0;
}

const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::config:
        return "config";
    case ErrorKind::adapter:
        return "adapter";
    case ErrorKind::format:
        return "format";
    }
    return "unknown";
}

int report(int code, const char* kind, std::string message) {
    for (char& ch : message)
        if (ch == '\n' || ch == '\r')
            ch = ' ';
    std::cerr << "error: code=" << code << " kind=" << kind << " message=" << message << std::endl;
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bit-depth and resolution adaptation around a host video codec"};
    app.require_subcommand(1);
    Config c;

    auto* enc = app.add_subcommand("encode", "Encode a raw video into a segmented stream");
    enc->add_option("input", c.input, "Raw planar YUV input")->required();
    add_video_options(*enc, c);
    enc->add_option("--qp", c.qp, "Base QP before mode offsets")->required();
    enc->add_option("--gop", c.gop, "Frames per decision window")->check(CLI::PositiveNumber);
    enc->add_option("--adapter-encode", c.adapter_encode, "Host encoder command template")->required();
    enc->add_option("--adapter-decode", c.adapter_decode, "Host decoder command template");
    enc->add_option("--codec-id", c.codec_id, "Host codec identifier");
    enc->add_option("--qro-model", c.qro_model, "Resolution decision model (VSQ2)");
    enc->add_option("--weights", c.weights, "Weight bank (unused by encode)");
    enc->add_option("--force-mode", c.force_mode, "Override the resolution decision")
        ->check(CLI::IsMember({"auto", "ebd", "sr-ebd"}));
    enc->add_option("--workdir", c.workdir, "Scratch directory for raw files");
    enc->add_option("--out", c.out, "Output stream")->required();
    enc->add_option("--log", c.log, "JSON log path (default stdout)");

    auto* dec = app.add_subcommand("decode", "Decode a segmented stream to raw video");
    dec->add_option("input", c.input, "Stream file")->required();
    dec->add_option("--chroma", c.video.chroma, "Chroma format")->check(CLI::IsMember({"420", "444"}));
    dec->add_option("--qp", c.qp, "Base QP used at the encoder (selects the model group)")->required();
    dec->add_option("--adapter-decode", c.adapter_decode, "Host decoder command template")->required();
    dec->add_option("--adapter-encode", c.adapter_encode, "Host encoder command template");
    dec->add_option("--codec-id", c.codec_id, "Host codec identifier");
    dec->add_option("--weights", c.weights, "Weight bank (VSB2)");
    dec->add_flag("--no-cnn", c.no_cnn, "Lanczos3 up-sampling and left shift instead of the CNN");
    dec->add_flag("--baseline-upsample", c.baseline_upsample, "Lanczos3 instead of nearest neighbour before the CNN");
    dec->add_option("--block-size", c.block_size, "CNN block size")->check(CLI::PositiveNumber);
    dec->add_option("--overlap", c.overlap, "CNN block overlap")->check(CLI::NonNegativeNumber);
    dec->add_option("--workdir", c.workdir, "Scratch directory for raw files");
    dec->add_option("--out", c.out, "Output raw video")->required();
    dec->add_option("--log", c.log, "JSON log path (default stdout)");

    auto* ev = app.add_subcommand("evaluate", "RD points and BD deltas against the first label");
    ev->add_option("reference", c.reference, "Original raw video")->required();
    add_video_options(*ev, c);
    ev->add_option("--run", c.runs, "LABEL,QP,DECODED,STREAM (repeatable)")->required();
    ev->add_option("--sequence", c.sequence, "Sequence name in the CSV");
    ev->add_option("--qp-set", c.qp_set, "QP grouping for BD")->check(CLI::IsMember({"low", "high", "both", "all"}));
    ev->add_option("--vmaf-cmd", c.vmaf_cmd, "VMAF tool template with {ref} and {dist}");
    ev->add_option("--out", c.out, "RD table CSV")->required();
    ev->add_option("--bd-out", c.bd_out, "BD table CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(static_cast<int>(ErrorKind::config), "config", e.what());
    }

    try {
        if (*enc)
            return cmd_encode(c);
        if (*dec)
            return cmd_decode(c);
        return cmd_evaluate(c);
    } catch (const Error& e) {
        return report(static_cast<int>(e.kind()), kind_name(e.kind()), e.what());
    } catch (const std::exception& e) {
        return report(1, "internal", e.what());
    }
}
