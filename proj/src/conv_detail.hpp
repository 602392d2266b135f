#pragma once

#include <algorithm>
#include <string>

#include "vistra/cnn.hpp"
#include "vistra/error.hpp"

namespace vistra::detail {

inline void check_conv_shapes(const Tensor3& input, const cnn::ConvParams& p) {
    if (input.channels != p.in_channels)
        throw FormatError("conv2d: input has " + std::to_string(input.channels) + " channels, layer expects " +
                          std::to_string(p.in_channels));
    if (input.height < 1 || input.width < 1)
        throw FormatError("conv2d: empty input");
    if (p.weights.size() != static_cast<std::size_t>(p.out_channels) * p.in_channels * 9 ||
        p.bias.size() != static_cast<std::size_t>(p.out_channels))
        throw FormatError("conv2d: parameter arrays do not match layer shape");
}

// Input with a one-pixel zero border, [c][h+2][w+2].
inline std::vector<float> pad_input(const Tensor3& in) {
    const int pw = in.width + 2, ph = in.height + 2;
    std::vector<float> padded(static_cast<std::size_t>(in.channels) * ph * pw, 0.0f);
    for (int c = 0; c < in.channels; ++c)
        for (int y = 0; y < in.height; ++y) {
            const float* src = &in.data[c * in.plane_size() + static_cast<std::size_t>(y) * in.width];
            std::copy(src, src + in.width, &padded[(static_cast<std::size_t>(c) * ph + y + 1) * pw + 1]);
        }
    return padded;
}

// One output channel. Zero taps are skipped; they contribute nothing.
inline void conv_output_channel(const std::vector<float>& padded, int h, int w, const cnn::ConvParams& p, int o,
                                float* out) {
    const int pw = w + 2, ph = h + 2;
    std::fill(out, out + static_cast<std::size_t>(h) * w, p.bias[o]);
    for (int i = 0; i < p.in_channels; ++i) {
        const float* in_plane = padded.data() + static_cast<std::size_t>(i) * ph * pw;
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const float wt = p.weight(o, i, ky, kx);
                if (wt == 0.0f)
                    continue;
                for (int y = 0; y < h; ++y) {
                    const float* __restrict row = in_plane + static_cast<std::size_t>(y + ky) * pw + kx;
                    float* __restrict dst = out + static_cast<std::size_t>(y) * w;
                    for (int x = 0; x < w; ++x)
                        dst[x] += wt * row[x];
                }
            }
    }
}

} // namespace vistra::detail
