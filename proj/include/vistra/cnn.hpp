#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vistra/frame.hpp"
#include "vistra/tensor.hpp"

namespace vistra::cnn {

// Shape of the residual reconstruction network. All convolutions are 3x3,
// stride 1, zero padded.
struct NetworkSpec {
    int n_residual_blocks = 16;
    int feature_maps = 64;
    int kernel_size = 3;
    int stride = 1;
    int io_channels = 3;

    bool operator==(const NetworkSpec&) const = default;
};

struct ConvParams {
    int out_channels = 0;
    int in_channels = 0;
    std::vector<float> weights; // [out][in][3][3]
    std::vector<float> bias;    // [out]

    ConvParams() = default;
    ConvParams(int out, int in)
        : out_channels(out), in_channels(in), weights(static_cast<std::size_t>(out) * in * 9, 0.0f), bias(out, 0.0f) {}

    float& weight(int o, int i, int ky, int kx) { return weights[((static_cast<std::size_t>(o) * in_channels + i) * 3 + ky) * 3 + kx]; }
    float weight(int o, int i, int ky, int kx) const { return weights[((static_cast<std::size_t>(o) * in_channels + i) * 3 + ky) * 3 + kx]; }

    bool operator==(const ConvParams&) const = default;
};

struct PReluParams {
    std::vector<float> alpha; // one slope per channel

    bool operator==(const PReluParams&) const = default;
};

// x + conv2(prelu(conv1(x)))
struct ResidualBlock {
    ConvParams conv1;
    PReluParams prelu;
    ConvParams conv2;

    bool operator==(const ResidualBlock&) const = default;
};

struct ModelWeights {
    NetworkSpec spec;
    ConvParams head_conv;
    PReluParams head_prelu;
    std::vector<ResidualBlock> blocks;
    ConvParams post_blocks_conv;
    ConvParams tail_conv;

    // All parameters zero; the network is then the identity on its input.
    static ModelWeights zeros(const NetworkSpec& spec);

    // Throws FormatError unless the layer inventory matches `spec` and every value is finite.
    void validate() const;

    bool operator==(const ModelWeights&) const = default;
};

enum class AdaptationVersion : std::uint8_t { EBD = 0, SR_EBD = 1 };

const char* to_string(AdaptationVersion v);

// QP groups the reconstruction models are trained for.
inline constexpr int qp_groups[] = {22, 27, 32, 37, 42};

bool is_qp_group(int q);

struct ModelKey {
    std::string codec;
    AdaptationVersion version = AdaptationVersion::EBD;
    int qp_group = 22;

    auto operator<=>(const ModelKey&) const = default;
};

std::string to_string(const ModelKey& key);

using ModelBank = std::map<ModelKey, ModelWeights>;

// out[o][y][x] = bias[o] + sum_{i,dy,dx} w[o][i][dy][dx] * in[i][y+dy-1][x+dx-1],
// zero outside the input. Output channels are computed in parallel.
Tensor3 conv2d(const Tensor3& input, const ConvParams& params);

// In place: x if x >= 0, alpha[channel] * x otherwise.
void prelu(Tensor3& x, const PReluParams& alpha);

// Full network on one block; output has the input's shape, values in [0, 1].
Tensor3 network_forward(const ModelWeights& model, const Tensor3& block);

// Model group from the base QP (before offsets):
//   <= 24.5 -> 22, <= 29.5 -> 27, <= 34.5 -> 32, <= 39.5 -> 37, otherwise 42.
// 39.5 itself resolves to 37.
ModelKey select_model(double qp_base, const std::string& codec, AdaptationVersion version);

struct Tiling {
    int block_size = 96;
    int overlap = 4;
};

// Converts to RGB, runs the network over overlapping blocks, averages the
// seams and converts back with effective bit depth restored to the coding
// bit depth. Frames smaller than one block are rejected.
Frame reconstruct_frame(const Frame& frame, const ModelWeights& model, const Tiling& tiling = {});

} // namespace vistra::cnn
