#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace vistra {

enum class ChromaFormat : std::uint8_t { C420, C444 };

using Sample = std::uint16_t;

// One 2-D array of samples, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<Sample> samples;

    Plane() = default;
    Plane(int w, int h, Sample fill = 0)
        : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

    Sample& at(int x, int y) { return samples[static_cast<std::size_t>(y) * width + x]; }
    Sample at(int x, int y) const { return samples[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const Plane&) const = default;
};

// Planar YCbCr picture.
//
// `coding_bit_depth` is the container depth; `effective_bit_depth` is the
// number of low-order bits that carry signal. Samples always satisfy
// sample < 2^effective_bit_depth.
struct Frame {
    int width = 0;
    int height = 0;
    int coding_bit_depth = 8;
    int effective_bit_depth = 8;
    ChromaFormat chroma_format = ChromaFormat::C420;
    std::array<Plane, 3> planes;

    Frame() = default;
    Frame(int w, int h, int bit_depth, ChromaFormat chroma);

    Plane& luma() { return planes[0]; }
    const Plane& luma() const { return planes[0]; }

    // Max sample value at the effective bit depth.
    Sample max_value() const { return static_cast<Sample>((1u << effective_bit_depth) - 1); }

    // Throws FormatError if plane geometry, depths or sample ranges are inconsistent.
    void validate() const;

    // Same geometry and depths, zero samples.
    Frame blank_like() const;

    bool operator==(const Frame&) const = default;
};

int chroma_width(int width, ChromaFormat chroma);
int chroma_height(int height, ChromaFormat chroma);

struct VideoSequence {
    std::vector<Frame> frames;
    double frame_rate = 30.0;

    bool empty() const { return frames.empty(); }
    std::size_t size() const { return frames.size(); }

    // All frames share geometry and depths.
    void validate() const;
};

} // namespace vistra
