#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vistra/frame.hpp"

namespace vistra::qro {

// Per-GOP inputs to the resolution decision.
struct QroFeatures {
    double srqm_mean = 1.0; // [0, 1]
    double ti_mean = 0.0;   // luma code values
    double qp_base = 0.0;

    std::array<double, 3> as_array() const { return {srqm_mean, ti_mean, qp_base}; }
};

struct FeatureNorm {
    double mean = 0.0;
    double scale = 1.0;
};

// One tanh hidden layer, one sigmoid output. Features are z-scored with the
// stored statistics before the hidden layer.
struct MlpModel {
    int hidden_size = 10;
    std::array<FeatureNorm, 3> feature_norm{};
    std::vector<double> hidden_weights; // [hidden][3]
    std::vector<double> hidden_bias;    // [hidden]
    std::vector<double> output_weights; // [hidden]
    double output_bias = 0.0;

    static MlpModel zeros(int hidden_size = 10);

    void validate() const;

    std::array<double, 3> normalize(const QroFeatures& f) const;
    QroFeatures denormalize(const std::array<double, 3>& z) const;
};

// Mean absolute luma difference to the previous and next frame (whichever
// exist), averaged over the available neighbours. 0 for a single frame.
double temporal_information(std::span<const Plane* const> window, std::size_t index);

// Per-frame energy-difference score between reference and resampled luma,
// from a two-level Haar decomposition, averaged over the window.
double srqm_score(std::span<const Frame> reference, std::span<const Frame> resampled);

// Single-frame score used by srqm_score.
double srqm_frame(const Plane& reference, const Plane& resampled);

// Lanczos3 down then up by 2, as SRQM's resampled input.
Frame srqm_resample(const Frame& frame);

QroFeatures gop_features(const VideoSequence& video, std::size_t gop_start, std::size_t gop_len, double qp_base);

// Probability in (0, 1) that resolution adaptation pays off.
double mlp_forward(const MlpModel& model, const QroFeatures& f);

// True (SR + EBD) iff mlp_forward >= 0.5.
bool decide_sr(const MlpModel& model, const QroFeatures& f);

// "VSQ2" | version u16 | hidden u16 | norm (mean, scale) x 3 | hidden weights | hidden bias |
// output weights | output bias; all reals float32 little-endian.
inline constexpr std::uint16_t mlp_format_version = 1;

std::vector<std::uint8_t> serialize_mlp(const MlpModel& model);
MlpModel parse_mlp(std::span<const std::uint8_t> bytes);
void save_mlp(const MlpModel& model, const std::string& path);
MlpModel load_mlp(const std::string& path);

} // namespace vistra::qro
