#include "vistra/qro.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vistra/bytes.hpp"
#include "vistra/error.hpp"
#include "vistra/parallel.hpp"
#include "vistra/resampler.hpp"

namespace vistra::qro {

namespace {

constexpr double energy_eps = 1e-8;

struct Subbands {
    // Level-1 details, then level-2 approximation and details.
    double hl1 = 0, lh1 = 0, hh1 = 0;
    double ll2 = 0, hl2 = 0, lh2 = 0, hh2 = 0;
};

struct Image {
    int w = 0, h = 0;
    std::vector<double> v;
    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

double mean_square(const std::vector<double>& v) {
    if (v.empty())
        return 0.0;
    double acc = 0.0;
    for (double x : v)
        acc += x * x;
    return acc / static_cast<double>(v.size());
}

// One orthonormal Haar level over the even-sized top-left part of `img`.
// Returns LL and writes the energies of the three detail bands.
Image haar_level(const Image& img, double& hl, double& lh, double& hh) {
    Image ll;
    ll.w = img.w / 2;
    ll.h = img.h / 2;
    ll.v.resize(static_cast<std::size_t>(ll.w) * ll.h);
    std::vector<double> b_hl(ll.v.size()), b_lh(ll.v.size()), b_hh(ll.v.size());
    for (int y = 0; y < ll.h; ++y)
        for (int x = 0; x < ll.w; ++x) {
            const double a = img.at(2 * x, 2 * y), b = img.at(2 * x + 1, 2 * y);
            const double c = img.at(2 * x, 2 * y + 1), d = img.at(2 * x + 1, 2 * y + 1);
            const std::size_t i = static_cast<std::size_t>(y) * ll.w + x;
            ll.v[i] = 0.5 * (a + b + c + d);
            b_hl[i] = 0.5 * (a - b + c - d);
            b_lh[i] = 0.5 * (a + b - c - d);
            b_hh[i] = 0.5 * (a - b - c + d);
        }
    hl = mean_square(b_hl);
    lh = mean_square(b_lh);
    hh = mean_square(b_hh);
    return ll;
}

Subbands decompose(const Plane& p) {
    Image img;
    img.w = p.width;
    img.h = p.height;
    img.v.assign(p.samples.begin(), p.samples.end());
    Subbands s;
    const Image ll1 = haar_level(img, s.hl1, s.lh1, s.hh1);
    const Image ll2 = haar_level(ll1, s.hl2, s.lh2, s.hh2);
    s.ll2 = mean_square(ll2.v);
    return s;
}

double band_difference(double ref, double res) { return std::abs(ref - res) / (ref + energy_eps); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

MlpModel MlpModel::zeros(int hidden_size) {
    MlpModel m;
    m.hidden_size = hidden_size;
    m.hidden_weights.assign(static_cast<std::size_t>(hidden_size) * 3, 0.0);
    m.hidden_bias.assign(hidden_size, 0.0);
    m.output_weights.assign(hidden_size, 0.0);
    return m;
}

void MlpModel::validate() const {
    if (hidden_size < 1)
        throw FormatError("QRO model needs at least one hidden unit");
    if (hidden_weights.size() != static_cast<std::size_t>(hidden_size) * 3 ||
        hidden_bias.size() != static_cast<std::size_t>(hidden_size) ||
        output_weights.size() != static_cast<std::size_t>(hidden_size))
        throw FormatError("QRO model parameter sizes do not match hidden size");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::ranges::all_of(hidden_weights, finite) || !std::ranges::all_of(hidden_bias, finite) ||
        !std::ranges::all_of(output_weights, finite) || !std::isfinite(output_bias))
        throw FormatError("QRO model has non-finite parameters");
    for (const auto& n : feature_norm)
        if (!std::isfinite(n.mean) || !std::isfinite(n.scale) || n.scale == 0.0)
            throw FormatError("QRO model feature normalisation must be finite with non-zero scale");
}

std::array<double, 3> MlpModel::normalize(const QroFeatures& f) const {
    const auto raw = f.as_array();
    std::array<double, 3> z{};
    for (int k = 0; k < 3; ++k)
        z[k] = (raw[k] - feature_norm[k].mean) / feature_norm[k].scale;
    return z;
}

QroFeatures MlpModel::denormalize(const std::array<double, 3>& z) const {
    std::array<double, 3> raw{};
    for (int k = 0; k < 3; ++k)
        raw[k] = z[k] * feature_norm[k].scale + feature_norm[k].mean;
    return {raw[0], raw[1], raw[2]};
}

double temporal_information(std::span<const Plane* const> window, std::size_t index) {
    if (window.empty() || index >= window.size())
        throw ConfigError("temporal information index outside window");
    auto mad = [](const Plane& a, const Plane& b) {
        if (a.width != b.width || a.height != b.height)
            throw FormatError("temporal information needs equally sized frames");
        double acc = 0.0;
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            acc += std::abs(static_cast<double>(a.samples[i]) - b.samples[i]);
        return acc / static_cast<double>(a.samples.size());
    };
    double sum = 0.0;
    int n = 0;
    if (index > 0) {
        sum += mad(*window[index], *window[index - 1]);
        ++n;
    }
    if (index + 1 < window.size()) {
        sum += mad(*window[index], *window[index + 1]);
        ++n;
    }
    return n ? sum / n : 0.0;
}

double srqm_frame(const Plane& reference, const Plane& resampled) {
    if (reference.width != resampled.width || reference.height != resampled.height)
        throw FormatError("SRQM inputs differ in size");
    const Subbands r = decompose(reference);
    const Subbands t = decompose(resampled);
    const double penalty = 0.10 * band_difference(r.ll2, t.ll2) + 0.15 * band_difference(r.lh2, t.lh2) +
                           0.15 * band_difference(r.hl2, t.hl2) + 0.10 * band_difference(r.hh2, t.hh2) +
                           0.15 * band_difference(r.lh1, t.lh1) + 0.15 * band_difference(r.hl1, t.hl1) +
                           0.20 * band_difference(r.hh1, t.hh1);
    return std::clamp(1.0 - penalty, 0.0, 1.0);
}

double srqm_score(std::span<const Frame> reference, std::span<const Frame> resampled) {
    if (reference.size() != resampled.size())
        throw FormatError("SRQM windows differ in length");
    if (reference.empty())
        throw ConfigError("SRQM needs at least one frame");
    std::vector<double> scores(reference.size());
#pragma omp parallel for
    for (std::size_t i = 0; i < reference.size(); ++i)
        scores[i] = srqm_frame(reference[i].luma(), resampled[i].luma());
    double acc = 0.0;
    for (double s : scores)
        acc += s;
    return acc / static_cast<double>(scores.size());
}

Frame srqm_resample(const Frame& frame) { return lanczos3_upsample_2x(lanczos3_downsample_2x(frame)); }

QroFeatures gop_features(const VideoSequence& video, std::size_t gop_start, std::size_t gop_len, double qp_base) {
    if (gop_len == 0)
        throw ConfigError("GOP window is empty");
    if (gop_start + gop_len > video.size())
        throw ConfigError("GOP window [" + std::to_string(gop_start) + ", " + std::to_string(gop_start + gop_len) +
                          ") exceeds sequence of " + std::to_string(video.size()) + " frames");
    const std::span<const Frame> window(video.frames.data() + gop_start, gop_len);

    std::vector<Frame> resampled(gop_len);
    for (std::size_t i = 0; i < gop_len; ++i)
        resampled[i] = srqm_resample(window[i]);

    std::vector<const Plane*> luma(gop_len);
    for (std::size_t i = 0; i < gop_len; ++i)
        luma[i] = &window[i].luma();
    double ti = 0.0;
    for (std::size_t i = 0; i < gop_len; ++i)
        ti += temporal_information(luma, i);

    QroFeatures f;
    f.srqm_mean = srqm_score(window, resampled);
    f.ti_mean = ti / static_cast<double>(gop_len);
    f.qp_base = qp_base;
    return f;
}

double mlp_forward(const MlpModel& model, const QroFeatures& f) {
    const auto z = model.normalize(f);
    double logit = model.output_bias;
    for (int j = 0; j < model.hidden_size; ++j) {
        double a = model.hidden_bias[j];
        for (int k = 0; k < 3; ++k)
            a += model.hidden_weights[static_cast<std::size_t>(j) * 3 + k] * z[k];
        logit += model.output_weights[j] * std::tanh(a);
    }
    // Saturated logits would round to exactly 0 or 1 in double.
    constexpr double tiny = 1e-15;
    return std::clamp(sigmoid(logit), tiny, 1.0 - tiny);
}

bool decide_sr(const MlpModel& model, const QroFeatures& f) { return mlp_forward(model, f) >= 0.5; }

namespace {
constexpr char mlp_magic[4] = {'V', 'S', 'Q', '2'};
}

std::vector<std::uint8_t> serialize_mlp(const MlpModel& model) {
    model.validate();
    if (model.hidden_size > 0xffff)
        throw ConfigError("QRO hidden size too large for file format");
    ByteWriter w;
    w.text(std::string(mlp_magic, 4));
    w.u16(mlp_format_version);
    w.u16(static_cast<std::uint16_t>(model.hidden_size));
    for (const auto& n : model.feature_norm) {
        w.f32(static_cast<float>(n.mean));
        w.f32(static_cast<float>(n.scale));
    }
    for (double v : model.hidden_weights)
        w.f32(static_cast<float>(v));
    for (double v : model.hidden_bias)
        w.f32(static_cast<float>(v));
    for (double v : model.output_weights)
        w.f32(static_cast<float>(v));
    w.f32(static_cast<float>(model.output_bias));
    return w.take();
}

MlpModel parse_mlp(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, "QRO model");
    if (r.remaining() < 4 || r.text(4) != std::string(mlp_magic, 4))
        throw FormatError("QRO model: bad magic (expected \"VSQ2\")");
    const std::uint16_t version = r.u16();
    if (version != mlp_format_version)
        throw FormatError("QRO model: unsupported format version " + std::to_string(version));
    MlpModel m = MlpModel::zeros(r.u16());
    for (auto& n : m.feature_norm) {
        n.mean = r.f32();
        n.scale = r.f32();
    }
    for (double& v : m.hidden_weights)
        v = r.f32();
    for (double& v : m.hidden_bias)
        v = r.f32();
    for (double& v : m.output_weights)
        v = r.f32();
    m.output_bias = r.f32();
    if (!r.at_end())
        throw FormatError("QRO model: " + std::to_string(r.remaining()) + " trailing bytes");
    m.validate();
    return m;
}

void save_mlp(const MlpModel& model, const std::string& path) { write_file_bytes(path, serialize_mlp(model)); }

MlpModel load_mlp(const std::string& path) { return parse_mlp(read_file_bytes(path)); }

} // namespace vistra::qro
