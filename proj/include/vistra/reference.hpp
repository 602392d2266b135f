#pragma once

// Serial reference versions of the parallel kernels. They share the
// arithmetic order of the parallel code, so results must match bit for bit.
// Used by the unit tests and the kernel benchmark.

#include <vector>

#include "vistra/cnn.hpp"
#include "vistra/resampler.hpp"

namespace vistra::reference {

std::vector<double> filter_plane(const Plane& src, const FilterKernel& horizontal, const FilterKernel& vertical);

Tensor3 conv2d(const Tensor3& input, const cnn::ConvParams& params);

} // namespace vistra::reference
