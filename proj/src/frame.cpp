#include "vistra/frame.hpp"

#include <string>

#include "vistra/error.hpp"

namespace vistra {

int chroma_width(int width, ChromaFormat chroma) {
    return chroma == ChromaFormat::C420 ? (width + 1) / 2 : width;
}

int chroma_height(int height, ChromaFormat chroma) {
    return chroma == ChromaFormat::C420 ? (height + 1) / 2 : height;
}

Frame::Frame(int w, int h, int bit_depth, ChromaFormat chroma)
    : width(w), height(h), coding_bit_depth(bit_depth), effective_bit_depth(bit_depth), chroma_format(chroma) {
    planes[0] = Plane(w, h);
    planes[1] = Plane(chroma_width(w, chroma), chroma_height(h, chroma));
    planes[2] = Plane(chroma_width(w, chroma), chroma_height(h, chroma));
}

Frame Frame::blank_like() const {
    Frame out(width, height, coding_bit_depth, chroma_format);
    out.effective_bit_depth = effective_bit_depth;
    return out;
}

void Frame::validate() const {
    if (width <= 0 || height <= 0)
        throw FormatError("frame has non-positive dimensions");
    if (coding_bit_depth < 1 || coding_bit_depth > 16)
        throw FormatError("coding bit depth " + std::to_string(coding_bit_depth) + " outside 1..16");
    if (effective_bit_depth < 1 || effective_bit_depth > coding_bit_depth)
        throw FormatError("effective bit depth " + std::to_string(effective_bit_depth) +
                          " outside 1..coding bit depth");
    const int cw = chroma_width(width, chroma_format);
    const int ch = chroma_height(height, chroma_format);
    for (int p = 0; p < 3; ++p) {
        const Plane& pl = planes[p];
        const int ew = p == 0 ? width : cw;
        const int eh = p == 0 ? height : ch;
        if (pl.width != ew || pl.height != eh || pl.samples.size() != static_cast<std::size_t>(ew) * eh)
            throw FormatError("plane " + std::to_string(p) + " geometry inconsistent with chroma format");
        const Sample limit = max_value();
        for (Sample s : pl.samples)
            if (s > limit)
                throw FormatError("sample " + std::to_string(s) + " exceeds effective bit depth " +
                                  std::to_string(effective_bit_depth));
    }
}

void VideoSequence::validate() const {
    if (!(frame_rate > 0.0))
        throw FormatError("frame rate must be positive");
    if (frames.empty())
        return;
    const Frame& f0 = frames.front();
    for (const Frame& f : frames) {
        if (f.width != f0.width || f.height != f0.height || f.coding_bit_depth != f0.coding_bit_depth ||
            f.effective_bit_depth != f0.effective_bit_depth || f.chroma_format != f0.chroma_format)
            throw FormatError("frames of a sequence must share geometry and bit depths");
        f.validate();
    }
}

} // namespace vistra
