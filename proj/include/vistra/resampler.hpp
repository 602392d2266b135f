#pragma once

#include <vector>

#include "vistra/frame.hpp"

namespace vistra {

// Lanczos window with three lobes: sinc(x) * sinc(x / 3) for |x| < 3.
double lanczos3(double x);

// Per-output-sample taps of a 1-D resampling filter.
//
// Output sample i reads source samples first[i] .. first[i] + width - 1
// (indices outside the source are replicated from the nearest edge) with
// weights taps[i * width .. (i + 1) * width), which sum to 1.
struct FilterKernel {
    double support = 0.0; // half-width in source pixels
    int scale_num = 1;    // output/input ratio = scale_num / scale_den
    int scale_den = 1;
    int width = 0;        // taps per output sample
    int src_len = 0;
    int dst_len = 0;
    std::vector<int> first;
    std::vector<double> taps;

    const double* taps_for(int i) const { return taps.data() + static_cast<std::size_t>(i) * width; }
};

// Anti-aliased 2:1 decimation: Lanczos3 stretched by 2, 12 taps per output.
FilterKernel make_lanczos3_downsample(int src_len, int dst_len);

// 1:2 interpolation: unstretched Lanczos3, 6 taps per output phase.
FilterKernel make_lanczos3_upsample(int src_len, int dst_len);

// Separable filtering, rows then columns, before rounding. Returns
// dst_h x dst_w values row-major. Rows are processed in parallel.
std::vector<double> filter_plane(const Plane& src, const FilterKernel& horizontal, const FilterKernel& vertical);

// Round half up and clip to [0, max_value].
Plane round_plane(const std::vector<double>& values, int width, int height, Sample max_value);

// Output dimensions are halved. Width and height must be even.
Frame lanczos3_downsample_2x(const Frame& frame);

Frame lanczos3_upsample_2x(const Frame& frame);

// Each sample is replicated into a 2x2 block.
Frame nearest_upsample_2x(const Frame& frame);

// Drops `bits` low-order bits; coding bit depth unchanged.
Frame ebd_downshift(const Frame& frame, int bits);

// Restores `bits` bits by a left shift.
Frame ebd_upshift(const Frame& frame, int bits);

} // namespace vistra
