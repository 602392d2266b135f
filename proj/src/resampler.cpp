#include "vistra/resampler.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "resample_detail.hpp"
#include "vistra/error.hpp"
#include "vistra/parallel.hpp"

namespace vistra {

double lanczos3(double x) {
    x = std::abs(x);
    if (x < 1e-12)
        return 1.0;
    if (x >= 3.0)
        return 0.0;
    const double px = std::numbers::pi * x;
    return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
}

namespace {

// Kernel centred at source coordinate centre(i), dilated by `stretch`.
template <typename Centre>
FilterKernel make_kernel(int src_len, int dst_len, double support, double stretch, int num, int den, Centre centre) {
    if (src_len < 1 || dst_len < 1)
        throw ConfigError("resampling requires non-empty planes");
    FilterKernel k;
    k.support = support;
    k.scale_num = num;
    k.scale_den = den;
    k.width = static_cast<int>(2 * support);
    k.src_len = src_len;
    k.dst_len = dst_len;
    k.first.resize(dst_len);
    k.taps.resize(static_cast<std::size_t>(dst_len) * k.width);
    for (int i = 0; i < dst_len; ++i) {
        const double c = centre(i);
        const int first = static_cast<int>(std::floor(c - support)) + 1;
        k.first[i] = first;
        double* t = k.taps.data() + static_cast<std::size_t>(i) * k.width;
        double sum = 0.0;
        for (int j = 0; j < k.width; ++j) {
            t[j] = lanczos3((first + j - c) / stretch);
            sum += t[j];
        }
        for (int j = 0; j < k.width; ++j)
            t[j] /= sum;
    }
    return k;
}

Frame with_planes_like(const Frame& src, int w, int h) {
    Frame out(w, h, src.coding_bit_depth, src.chroma_format);
    out.effective_bit_depth = src.effective_bit_depth;
    return out;
}

template <typename MakeKernel>
Frame resample_frame(const Frame& frame, int out_w, int out_h, MakeKernel make) {
    Frame out = with_planes_like(frame, out_w, out_h);
    for (int p = 0; p < 3; ++p) {
        const Plane& src = frame.planes[p];
        Plane& dst = out.planes[p];
        const FilterKernel h = make(src.width, dst.width);
        const FilterKernel v = make(src.height, dst.height);
        dst = round_plane(filter_plane(src, h, v), dst.width, dst.height, frame.max_value());
    }
    return out;
}

} // namespace

FilterKernel make_lanczos3_downsample(int src_len, int dst_len) {
    // Output i sits between source samples 2i and 2i+1.
    return make_kernel(src_len, dst_len, 6.0, 2.0, 1, 2, [](int i) { return 2.0 * i + 0.5; });
}

FilterKernel make_lanczos3_upsample(int src_len, int dst_len) {
    return make_kernel(src_len, dst_len, 3.0, 1.0, 2, 1, [](int i) { return 0.5 * i - 0.25; });
}

std::vector<double> filter_plane(const Plane& src, const FilterKernel& horizontal, const FilterKernel& vertical) {
    if (horizontal.src_len != src.width || vertical.src_len != src.height)
        throw ConfigError("filter kernel does not match plane dimensions");
    const int tw = horizontal.dst_len;
    const int oh = vertical.dst_len;
    std::vector<double> tmp(static_cast<std::size_t>(tw) * src.height);
    std::vector<double> out(static_cast<std::size_t>(tw) * oh);
#pragma omp parallel
    {
#pragma omp for
        for (int y = 0; y < src.height; ++y)
            detail::filter_row(&src.samples[static_cast<std::size_t>(y) * src.width], horizontal,
                               &tmp[static_cast<std::size_t>(y) * tw]);
#pragma omp for
        for (int oy = 0; oy < oh; ++oy)
            detail::filter_column_row(tmp.data(), tw, vertical, oy, &out[static_cast<std::size_t>(oy) * tw]);
    }
    return out;
}

Plane round_plane(const std::vector<double>& values, int width, int height, Sample max_value) {
    Plane out(width, height);
    const double hi = max_value;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = static_cast<Sample>(std::clamp(std::floor(values[i] + 0.5), 0.0, hi));
    return out;
}

Frame lanczos3_downsample_2x(const Frame& frame) {
    if (frame.width % 2 != 0 || frame.height % 2 != 0)
        throw ConfigError("2x down-sampling needs even dimensions, got " + std::to_string(frame.width) + "x" +
                          std::to_string(frame.height));
    return resample_frame(frame, frame.width / 2, frame.height / 2, make_lanczos3_downsample);
}

Frame lanczos3_upsample_2x(const Frame& frame) {
    return resample_frame(frame, frame.width * 2, frame.height * 2, make_lanczos3_upsample);
}

Frame nearest_upsample_2x(const Frame& frame) {
    Frame out = with_planes_like(frame, frame.width * 2, frame.height * 2);
    for (int p = 0; p < 3; ++p) {
        const Plane& src = frame.planes[p];
        Plane& dst = out.planes[p];
#pragma omp parallel for
        for (int y = 0; y < dst.height; ++y)
            for (int x = 0; x < dst.width; ++x)
                dst.at(x, y) = src.at(std::min(x / 2, src.width - 1), std::min(y / 2, src.height - 1));
    }
    return out;
}

Frame ebd_downshift(const Frame& frame, int bits) {
    if (bits < 1)
        throw ConfigError("bit-depth shift must be at least 1");
    if (frame.effective_bit_depth - bits < 1)
        throw ConfigError("down-shift by " + std::to_string(bits) + " would reduce effective bit depth " +
                          std::to_string(frame.effective_bit_depth) + " below 1");
    Frame out = frame;
    out.effective_bit_depth -= bits;
    for (Plane& p : out.planes)
        for (Sample& s : p.samples)
            s = static_cast<Sample>(s >> bits);
    return out;
}

Frame ebd_upshift(const Frame& frame, int bits) {
    if (bits < 1)
        throw ConfigError("bit-depth shift must be at least 1");
    if (frame.effective_bit_depth + bits > frame.coding_bit_depth)
        throw ConfigError("up-shift by " + std::to_string(bits) + " would exceed coding bit depth " +
                          std::to_string(frame.coding_bit_depth));
    Frame out = frame;
    out.effective_bit_depth += bits;
    for (Plane& p : out.planes)
        for (Sample& s : p.samples)
            s = static_cast<Sample>(s << bits);
    return out;
}

} // namespace vistra
