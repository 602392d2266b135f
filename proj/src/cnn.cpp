#include "vistra/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "conv_detail.hpp"
#include "vistra/error.hpp"
#include "vistra/parallel.hpp"
#include "vistra/video_io.hpp"

namespace vistra::cnn {

namespace {

void check_conv(const ConvParams& p, int out, int in, const std::string& name) {
    if (p.out_channels != out || p.in_channels != in)
        throw FormatError(name + ": expected " + std::to_string(out) + "x" + std::to_string(in) + " conv, got " +
                          std::to_string(p.out_channels) + "x" + std::to_string(p.in_channels));
    if (p.weights.size() != static_cast<std::size_t>(out) * in * 9 || p.bias.size() != static_cast<std::size_t>(out))
        throw FormatError(name + ": parameter array sizes do not match shape");
    for (float v : p.weights)
        if (!std::isfinite(v))
            throw FormatError(name + ": non-finite weight");
    for (float v : p.bias)
        if (!std::isfinite(v))
            throw FormatError(name + ": non-finite bias");
}

void check_prelu(const PReluParams& p, int channels, const std::string& name) {
    if (p.alpha.size() != static_cast<std::size_t>(channels))
        throw FormatError(name + ": expected " + std::to_string(channels) + " slopes, got " +
                          std::to_string(p.alpha.size()));
    for (float v : p.alpha)
        if (!std::isfinite(v))
            throw FormatError(name + ": non-finite slope");
}

void add_in_place(Tensor3& acc, const Tensor3& x) {
    for (std::size_t i = 0; i < acc.data.size(); ++i)
        acc.data[i] += x.data[i];
}

void require_finite(const Tensor3& t, const char* stage) {
    for (float v : t.data)
        if (!std::isfinite(v))
            throw FormatError(std::string("network produced non-finite values at ") + stage);
}

} // namespace

const char* to_string(AdaptationVersion v) { return v == AdaptationVersion::EBD ? "EBD" : "SR_EBD"; }

bool is_qp_group(int q) { return std::ranges::find(qp_groups, q) != std::end(qp_groups); }

std::string to_string(const ModelKey& key) {
    return key.codec + "/" + to_string(key.version) + "/" + std::to_string(key.qp_group);
}

ModelWeights ModelWeights::zeros(const NetworkSpec& spec) {
    const int f = spec.feature_maps;
    const int io = spec.io_channels;
    ModelWeights m;
    m.spec = spec;
    m.head_conv = ConvParams(f, io);
    m.head_prelu.alpha.assign(f, 0.0f);
    m.blocks.resize(spec.n_residual_blocks);
    for (auto& b : m.blocks) {
        b.conv1 = ConvParams(f, f);
        b.prelu.alpha.assign(f, 0.0f);
        b.conv2 = ConvParams(f, f);
    }
    m.post_blocks_conv = ConvParams(f, f);
    m.tail_conv = ConvParams(io, f);
    return m;
}

void ModelWeights::validate() const {
    if (spec.kernel_size != 3 || spec.stride != 1)
        throw FormatError("only 3x3 stride-1 convolutions are supported");
    if (spec.n_residual_blocks < 0 || spec.feature_maps < 1 || spec.io_channels < 1)
        throw FormatError("invalid network spec");
    const int f = spec.feature_maps;
    const int io = spec.io_channels;
    check_conv(head_conv, f, io, "head conv");
    check_prelu(head_prelu, f, "head prelu");
    if (blocks.size() != static_cast<std::size_t>(spec.n_residual_blocks))
        throw FormatError("expected " + std::to_string(spec.n_residual_blocks) + " residual blocks, got " +
                          std::to_string(blocks.size()));
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const std::string name = "residual block " + std::to_string(k);
        check_conv(blocks[k].conv1, f, f, name + " conv1");
        check_prelu(blocks[k].prelu, f, name + " prelu");
        check_conv(blocks[k].conv2, f, f, name + " conv2");
    }
    check_conv(post_blocks_conv, f, f, "post-block conv");
    check_conv(tail_conv, io, f, "tail conv");
}

Tensor3 conv2d(const Tensor3& input, const ConvParams& params) {
    detail::check_conv_shapes(input, params);
    const auto padded = detail::pad_input(input);
    Tensor3 out(params.out_channels, input.height, input.width);
#pragma omp parallel for schedule(static)
    for (int o = 0; o < params.out_channels; ++o)
        detail::conv_output_channel(padded, input.height, input.width, params, o, out.channel(o).data());
    return out;
}

void prelu(Tensor3& x, const PReluParams& alpha) {
    if (alpha.alpha.size() != static_cast<std::size_t>(x.channels))
        throw FormatError("prelu: slope count does not match channel count");
    for (int c = 0; c < x.channels; ++c) {
        const float a = alpha.alpha[c];
        for (float& v : x.channel(c))
            v = v >= 0.0f ? v : a * v;
    }
}

Tensor3 network_forward(const ModelWeights& model, const Tensor3& block) {
    if (block.channels != model.spec.io_channels)
        throw FormatError("block has " + std::to_string(block.channels) + " channels, network expects " +
                          std::to_string(model.spec.io_channels));

    Tensor3 head = conv2d(block, model.head_conv);
    prelu(head, model.head_prelu);

    Tensor3 x = head;
    for (const ResidualBlock& rb : model.blocks) {
        Tensor3 t = conv2d(x, rb.conv1);
        prelu(t, rb.prelu);
        Tensor3 r = conv2d(t, rb.conv2);
        add_in_place(r, x);
        x = std::move(r);
    }

    Tensor3 g = conv2d(x, model.post_blocks_conv);
    add_in_place(g, head);
    require_finite(g, "long skip");

    Tensor3 out = conv2d(g, model.tail_conv);
    require_finite(out, "tail conv");
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::clamp(block.data[i] + std::tanh(out.data[i]), 0.0f, 1.0f);
    return out;
}

ModelKey select_model(double qp_base, const std::string& codec, AdaptationVersion version) {
    int group = 42;
    if (qp_base <= 24.5)
        group = 22;
    else if (qp_base <= 29.5)
        group = 27;
    else if (qp_base <= 34.5)
        group = 32;
    else if (qp_base <= 39.5)
        group = 37;
    return {codec, version, group};
}

Frame reconstruct_frame(const Frame& frame, const ModelWeights& model, const Tiling& tiling) {
    frame.validate();
    const RgbImage rgb = to_rgb(frame);
    const BlockGrid grid = plan_blocks(frame.width, frame.height, tiling.block_size, tiling.overlap);
    std::vector<RgbBlock> blocks = extract_blocks(rgb, grid);

    // Blocks are independent; the inner conv2d region runs single-threaded when nested.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        try {
            blocks[k] = network_forward(model, blocks[k]);
        } catch (...) {
#pragma omp critical
            if (!failure)
                failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);

    Frame tmpl = frame.blank_like();
    tmpl.effective_bit_depth = frame.coding_bit_depth;
    return from_rgb(aggregate_blocks(blocks, grid), tmpl);
}

} // namespace vistra::cnn
