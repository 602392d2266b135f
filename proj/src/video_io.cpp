#include "vistra/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "vistra/error.hpp"
#include "vistra/parallel.hpp"

namespace vistra {

namespace {

// BT.709 luma coefficients.
constexpr double kr = 0.2126;
constexpr double kb = 0.0722;
constexpr double kg = 1.0 - kr - kb;
constexpr double cr_to_r = 2.0 * (1.0 - kr);
constexpr double cb_to_b = 2.0 * (1.0 - kb);

int bytes_per_sample(int bit_depth) { return bit_depth <= 8 ? 1 : 2; }

double quantise(double v, double max_code) {
    return std::clamp(std::floor(v + 0.5), 0.0, max_code);
}

// Bilinear co-sited up-sampling of a 4:2:0 chroma plane to luma resolution.
std::vector<double> upsample_chroma(const Plane& c, int width, int height) {
    std::vector<double> out(static_cast<std::size_t>(width) * height);
#pragma omp parallel for
    for (int y = 0; y < height; ++y) {
        const int y0 = y / 2;
        const int y1 = std::min(y0 + 1, c.height - 1);
        const double fy = (y % 2) * 0.5;
        for (int x = 0; x < width; ++x) {
            const int x0 = x / 2;
            const int x1 = std::min(x0 + 1, c.width - 1);
            const double fx = (x % 2) * 0.5;
            const double top = (1.0 - fx) * c.at(x0, y0) + fx * c.at(x1, y0);
            const double bot = (1.0 - fx) * c.at(x0, y1) + fx * c.at(x1, y1);
            out[static_cast<std::size_t>(y) * width + x] = (1.0 - fy) * top + fy * bot;
        }
    }
    return out;
}

} // namespace

std::size_t raw_frame_bytes(int width, int height, int bit_depth, ChromaFormat chroma) {
    const std::size_t luma = static_cast<std::size_t>(width) * height;
    const std::size_t chroma_n = static_cast<std::size_t>(chroma_width(width, chroma)) * chroma_height(height, chroma);
    return (luma + 2 * chroma_n) * bytes_per_sample(bit_depth);
}

VideoSequence decode_raw_video(std::span<const std::uint8_t> bytes, int width, int height, int bit_depth,
                               ChromaFormat chroma, double frame_rate) {
    if (width <= 0 || height <= 0)
        throw ConfigError("raw video dimensions must be positive");
    if (bit_depth < 1 || bit_depth > 16)
        throw ConfigError("raw video bit depth must be in 1..16");
    const std::size_t frame_bytes = raw_frame_bytes(width, height, bit_depth, chroma);
    if (bytes.size() % frame_bytes != 0)
        throw FormatError("raw video truncated: " + std::to_string(bytes.size()) + " bytes is not a multiple of " +
                          std::to_string(frame_bytes) + " bytes per frame");

    VideoSequence seq;
    seq.frame_rate = frame_rate;
    const std::size_t count = bytes.size() / frame_bytes;
    const bool wide = bytes_per_sample(bit_depth) == 2;
    const unsigned limit = (1u << bit_depth) - 1;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < count; ++f) {
        Frame frame(width, height, bit_depth, chroma);
        for (Plane& plane : frame.planes) {
            for (Sample& s : plane.samples) {
                unsigned v = bytes[pos++];
                if (wide)
                    v |= static_cast<unsigned>(bytes[pos++]) << 8;
                if (v > limit)
                    throw FormatError("frame " + std::to_string(f) + ": sample " + std::to_string(v) +
                                      " exceeds " + std::to_string(bit_depth) + "-bit range");
                s = static_cast<Sample>(v);
            }
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

VideoSequence read_raw_video(const std::filesystem::path& path, int width, int height, int bit_depth,
                             ChromaFormat chroma, double frame_rate) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open raw video " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_raw_video(bytes, width, height, bit_depth, chroma, frame_rate);
}

std::vector<std::uint8_t> encode_raw_video(const VideoSequence& seq) {
    std::vector<std::uint8_t> out;
    if (seq.empty())
        return out;
    const Frame& f0 = seq.frames.front();
    const bool wide = bytes_per_sample(f0.coding_bit_depth) == 2;
    out.reserve(seq.size() * raw_frame_bytes(f0.width, f0.height, f0.coding_bit_depth, f0.chroma_format));
    for (const Frame& frame : seq.frames) {
        for (const Plane& plane : frame.planes) {
            for (Sample s : plane.samples) {
                out.push_back(static_cast<std::uint8_t>(s & 0xff));
                if (wide)
                    out.push_back(static_cast<std::uint8_t>(s >> 8));
            }
        }
    }
    return out;
}

void write_raw_video(const VideoSequence& seq, const std::filesystem::path& path) {
    if (seq.empty())
        throw ConfigError("refusing to write an empty video sequence");
    seq.validate();
    const auto bytes = encode_raw_video(seq);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write raw video " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ConfigError("write failed for " + path.string());
}

RgbImage to_rgb(const Frame& frame) {
    const int w = frame.width;
    const int h = frame.height;
    const double scale = std::ldexp(1.0, frame.effective_bit_depth - 8);
    const double y_off = 16.0 * scale, y_range = 219.0 * scale;
    const double c_off = 128.0 * scale, c_range = 224.0 * scale;

    std::vector<double> cb, cr;
    const bool sub = frame.chroma_format == ChromaFormat::C420;
    if (sub) {
        cb = upsample_chroma(frame.planes[1], w, h);
        cr = upsample_chroma(frame.planes[2], w, h);
    }

    RgbImage rgb(3, h, w);
#pragma omp parallel for
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double yy = (frame.planes[0].samples[i] - y_off) / y_range;
            const double u = ((sub ? cb[i] : frame.planes[1].samples[i]) - c_off) / c_range;
            const double v = ((sub ? cr[i] : frame.planes[2].samples[i]) - c_off) / c_range;
            const double r = yy + cr_to_r * v;
            const double b = yy + cb_to_b * u;
            const double g = (yy - kr * r - kb * b) / kg;
            rgb.at(0, y, x) = static_cast<float>(std::clamp(r, 0.0, 1.0));
            rgb.at(1, y, x) = static_cast<float>(std::clamp(g, 0.0, 1.0));
            rgb.at(2, y, x) = static_cast<float>(std::clamp(b, 0.0, 1.0));
        }
    }
    return rgb;
}

Frame from_rgb(const RgbImage& rgb, const Frame& tmpl) {
    if (rgb.channels != 3 || rgb.width != tmpl.width || rgb.height != tmpl.height)
        throw FormatError("RGB image does not match frame template geometry");
    const int w = tmpl.width;
    const int h = tmpl.height;
    Frame out = tmpl.blank_like();
    const double scale = std::ldexp(1.0, tmpl.effective_bit_depth - 8);
    const double max_code = static_cast<double>(out.max_value());

    std::vector<double> cb(static_cast<std::size_t>(w) * h), cr(cb.size());
#pragma omp parallel for
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double r = rgb.at(0, y, x), g = rgb.at(1, y, x), b = rgb.at(2, y, x);
            const double yy = kr * r + kg * g + kb * b;
            cb[i] = (b - yy) / cb_to_b;
            cr[i] = (r - yy) / cr_to_r;
            out.planes[0].samples[i] = static_cast<Sample>(quantise((219.0 * yy + 16.0) * scale, max_code));
        }
    }

    auto put_chroma = [&](Plane& dst, const std::vector<double>& src) {
        const bool sub = tmpl.chroma_format == ChromaFormat::C420;
#pragma omp parallel for
        for (int cy = 0; cy < dst.height; ++cy) {
            for (int cx = 0; cx < dst.width; ++cx) {
                double acc = 0.0;
                int n = 0;
                const int span = sub ? 2 : 1;
                for (int dy = 0; dy < span; ++dy)
                    for (int dx = 0; dx < span; ++dx) {
                        const int x = cx * span + dx, y = cy * span + dy;
                        if (x < w && y < h) {
                            acc += src[static_cast<std::size_t>(y) * w + x];
                            ++n;
                        }
                    }
                dst.at(cx, cy) = static_cast<Sample>(quantise((224.0 * (acc / n) + 128.0) * scale, max_code));
            }
        }
    };
    put_chroma(out.planes[1], cb);
    put_chroma(out.planes[2], cr);
    return out;
}

std::vector<int> plan_axis(int length, int block_size, int overlap) {
    if (block_size <= 0 || overlap < 0 || overlap >= block_size)
        throw ConfigError("block tiling requires 0 <= overlap < block_size");
    if (length < block_size)
        throw ConfigError("frame dimension " + std::to_string(length) + " smaller than block size " +
                          std::to_string(block_size));
    const int stride = block_size - overlap;
    std::vector<int> origins{0};
    int x = 0;
    while (x + block_size < length) {
        x = std::min(x + stride, length - block_size);
        origins.push_back(x);
    }
    return origins;
}

BlockGrid plan_blocks(int width, int height, int block_size, int overlap) {
    BlockGrid grid;
    grid.block_size = block_size;
    grid.overlap = overlap;
    grid.frame_width = width;
    grid.frame_height = height;
    const auto xs = plan_axis(width, block_size, overlap);
    const auto ys = plan_axis(height, block_size, overlap);
    grid.origins.reserve(xs.size() * ys.size());
    for (int y : ys)
        for (int x : xs)
            grid.origins.emplace_back(x, y);
    return grid;
}

std::vector<RgbBlock> extract_blocks(const RgbImage& image, const BlockGrid& grid) {
    if (image.width != grid.frame_width || image.height != grid.frame_height)
        throw ConfigError("block grid does not match image dimensions");
    const int bs = grid.block_size;
    std::vector<RgbBlock> blocks(grid.origins.size());
#pragma omp parallel for
    for (std::size_t k = 0; k < grid.origins.size(); ++k) {
        const auto [ox, oy] = grid.origins[k];
        RgbBlock blk(image.channels, bs, bs);
        for (int c = 0; c < image.channels; ++c)
            for (int y = 0; y < bs; ++y) {
                const float* src = &image.data[c * image.plane_size() + static_cast<std::size_t>(oy + y) * image.width + ox];
                std::copy(src, src + bs, &blk.at(c, y, 0));
            }
        blocks[k] = std::move(blk);
    }
    return blocks;
}

RgbImage aggregate_blocks(std::span<const RgbBlock> blocks, const BlockGrid& grid) {
    if (blocks.size() != grid.origins.size())
        throw ConfigError("block count " + std::to_string(blocks.size()) + " does not match grid size " +
                          std::to_string(grid.origins.size()));
    const int bs = grid.block_size;
    const int channels = blocks.empty() ? 3 : blocks.front().channels;
    for (const auto& b : blocks)
        if (b.channels != channels || b.width != bs || b.height != bs)
            throw ConfigError("block shape does not match grid block size");

    std::vector<double> sum(static_cast<std::size_t>(channels) * grid.frame_width * grid.frame_height, 0.0);
    std::vector<int> count(static_cast<std::size_t>(grid.frame_width) * grid.frame_height, 0);
    const std::size_t plane = count.size();
    // Serial accumulation keeps the reduction order fixed.
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto [ox, oy] = grid.origins[k];
        for (int y = 0; y < bs; ++y)
            for (int x = 0; x < bs; ++x) {
                const std::size_t i = static_cast<std::size_t>(oy + y) * grid.frame_width + ox + x;
                ++count[i];
                for (int c = 0; c < channels; ++c)
                    sum[c * plane + i] += blocks[k].at(c, y, x);
            }
    }

    RgbImage out(channels, grid.frame_height, grid.frame_width);
    for (int c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < plane; ++i)
            out.data[c * plane + i] = count[i] ? static_cast<float>(sum[c * plane + i] / count[i]) : 0.0f;
    return out;
}

} // namespace vistra
