#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "vistra/frame.hpp"
#include "vistra/tensor.hpp"

namespace vistra {

// ---------------------------------------------------------------------------
// Raw planar video: Y, Cb, Cr planes per frame, row-major. One byte per
// sample up to 8 bits, otherwise two bytes little-endian.
// ---------------------------------------------------------------------------

std::size_t raw_frame_bytes(int width, int height, int bit_depth, ChromaFormat chroma);

VideoSequence read_raw_video(const std::filesystem::path& path, int width, int height, int bit_depth,
                             ChromaFormat chroma, double frame_rate);

// Decodes an in-memory raw buffer; same rules as read_raw_video.
VideoSequence decode_raw_video(std::span<const std::uint8_t> bytes, int width, int height, int bit_depth,
                               ChromaFormat chroma, double frame_rate);

void write_raw_video(const VideoSequence& seq, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_raw_video(const VideoSequence& seq);

// ---------------------------------------------------------------------------
// Colour conversion (BT.709, limited range) at the frame's effective bit depth.
// ---------------------------------------------------------------------------

// 4:2:0 chroma is first up-sampled bilinearly (co-sited with luma).
RgbImage to_rgb(const Frame& frame);

// `tmpl` supplies geometry, depths and chroma format of the result. Samples
// are quantised at tmpl.effective_bit_depth; 4:2:0 chroma is the 2x2 mean.
Frame from_rgb(const RgbImage& rgb, const Frame& tmpl);

// ---------------------------------------------------------------------------
// Overlapping block tiling
// ---------------------------------------------------------------------------

struct BlockGrid {
    int block_size = 96;
    int overlap = 4;
    int frame_width = 0;
    int frame_height = 0;
    std::vector<std::pair<int, int>> origins; // (x, y), row-major over y then x
};

// Origins along one axis: stride block_size - overlap, last block flush with the border.
std::vector<int> plan_axis(int length, int block_size, int overlap);

BlockGrid plan_blocks(int width, int height, int block_size = 96, int overlap = 4);

std::vector<RgbBlock> extract_blocks(const RgbImage& image, const BlockGrid& grid);

// Overlapping pixels take the mean of every covering block.
RgbImage aggregate_blocks(std::span<const RgbBlock> blocks, const BlockGrid& grid);

} // namespace vistra
