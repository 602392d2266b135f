#include "vistra/reference.hpp"

#include "conv_detail.hpp"
#include "resample_detail.hpp"

namespace vistra::reference {

std::vector<double> filter_plane(const Plane& src, const FilterKernel& horizontal, const FilterKernel& vertical) {
    if (horizontal.src_len != src.width || vertical.src_len != src.height)
        throw ConfigError("filter kernel does not match plane dimensions");
    const int tw = horizontal.dst_len;
    std::vector<double> tmp(static_cast<std::size_t>(tw) * src.height);
    for (int y = 0; y < src.height; ++y)
        detail::filter_row(&src.samples[static_cast<std::size_t>(y) * src.width], horizontal,
                           &tmp[static_cast<std::size_t>(y) * tw]);
    std::vector<double> out(static_cast<std::size_t>(tw) * vertical.dst_len);
    for (int oy = 0; oy < vertical.dst_len; ++oy)
        detail::filter_column_row(tmp.data(), tw, vertical, oy, &out[static_cast<std::size_t>(oy) * tw]);
    return out;
}

Tensor3 conv2d(const Tensor3& input, const cnn::ConvParams& params) {
    detail::check_conv_shapes(input, params);
    const auto padded = detail::pad_input(input);
    Tensor3 out(params.out_channels, input.height, input.width);
    for (int o = 0; o < params.out_channels; ++o)
        detail::conv_output_channel(padded, input.height, input.width, params, o, out.channel(o).data());
    return out;
}

} // namespace vistra::reference
