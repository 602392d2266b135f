#pragma once

#include <algorithm>

#include "vistra/resampler.hpp"

namespace vistra::detail {

inline int clamp_index(int i, int len) { return std::clamp(i, 0, len - 1); }

// One output row of the horizontal pass.
inline void filter_row(const Sample* src, const FilterKernel& k, double* dst) {
    for (int ox = 0; ox < k.dst_len; ++ox) {
        const double* t = k.taps_for(ox);
        const int first = k.first[ox];
        double acc = 0.0;
        for (int j = 0; j < k.width; ++j)
            acc += t[j] * src[clamp_index(first + j, k.src_len)];
        dst[ox] = acc;
    }
}

// One output row of the vertical pass over the horizontally filtered image.
inline void filter_column_row(const double* tmp, int tmp_w, const FilterKernel& k, int oy, double* dst) {
    const double* t = k.taps_for(oy);
    const int first = k.first[oy];
    std::fill(dst, dst + tmp_w, 0.0);
    for (int j = 0; j < k.width; ++j) {
        const double* row = tmp + static_cast<std::size_t>(clamp_index(first + j, k.src_len)) * tmp_w;
        const double w = t[j];
        for (int x = 0; x < tmp_w; ++x)
            dst[x] += w * row[x];
    }
}

} // namespace vistra::detail
