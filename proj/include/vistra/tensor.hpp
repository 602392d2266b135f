#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vistra {

// Dense [channels][height][width] float array.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }

    float& at(int c, int y, int x) { return data[(c * plane_size()) + static_cast<std::size_t>(y) * width + x]; }
    float at(int c, int y, int x) const { return data[(c * plane_size()) + static_cast<std::size_t>(y) * width + x]; }

    std::span<float> channel(int c) { return {data.data() + c * plane_size(), plane_size()}; }
    std::span<const float> channel(int c) const { return {data.data() + c * plane_size(), plane_size()}; }

    bool same_shape(const Tensor3& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    bool operator==(const Tensor3&) const = default;
};

// Full-resolution RGB picture, channels R, G, B with values in [0, 1].
using RgbImage = Tensor3;

// Square RGB tile fed to the reconstruction network.
using RgbBlock = Tensor3;

} // namespace vistra
