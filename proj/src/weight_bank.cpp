#include "vistra/weight_bank.hpp"

#include "vistra/bytes.hpp"
#include "vistra/error.hpp"

namespace vistra::cnn {

namespace {

constexpr char magic[4] = {'V', 'S', 'B', '2'};
constexpr std::uint8_t tag_conv = 0;
constexpr std::uint8_t tag_prelu = 1;

void write_record(ByteWriter& w, std::uint8_t tag, std::span<const std::uint32_t> dims, std::span<const float> values) {
    w.u8(tag);
    w.u8(static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims)
        w.u32(d);
    for (float v : values)
        w.f32(v);
}

void write_conv(ByteWriter& w, const ConvParams& c) {
    const std::uint32_t wd[] = {static_cast<std::uint32_t>(c.out_channels), static_cast<std::uint32_t>(c.in_channels), 3, 3};
    write_record(w, tag_conv, wd, c.weights);
    const std::uint32_t bd[] = {static_cast<std::uint32_t>(c.out_channels)};
    write_record(w, tag_conv, bd, c.bias);
}

void write_prelu(ByteWriter& w, const PReluParams& p) {
    const std::uint32_t d[] = {static_cast<std::uint32_t>(p.alpha.size())};
    write_record(w, tag_prelu, d, p.alpha);
}

class LayerReader {
public:
    LayerReader(ByteReader& r, std::string model) : r_(r), model_(std::move(model)) {}

    std::vector<float> record(std::uint8_t want_tag, std::span<const std::uint32_t> want_dims, const std::string& layer) {
        const std::uint8_t tag = r_.u8();
        if (tag != want_tag)
            fail(layer, "layer tag " + std::to_string(tag) + ", expected " + std::to_string(want_tag));
        const std::uint8_t rank = r_.u8();
        if (rank != want_dims.size())
            fail(layer, "rank " + std::to_string(rank) + ", expected " + std::to_string(want_dims.size()));
        std::size_t count = 1;
        for (std::size_t i = 0; i < rank; ++i) {
            const std::uint32_t d = r_.u32();
            if (d != want_dims[i])
                fail(layer, "dimension " + std::to_string(i) + " is " + std::to_string(d) + ", expected " +
                                std::to_string(want_dims[i]));
            count *= d;
        }
        if (r_.remaining() < count * 4)
            fail(layer, "truncated payload");
        std::vector<float> values(count);
        for (float& v : values)
            v = r_.f32();
        return values;
    }

    ConvParams conv(int out, int in, const std::string& layer) {
        ConvParams c;
        c.out_channels = out;
        c.in_channels = in;
        const std::uint32_t wd[] = {static_cast<std::uint32_t>(out), static_cast<std::uint32_t>(in), 3, 3};
        c.weights = record(tag_conv, wd, layer + " weights");
        const std::uint32_t bd[] = {static_cast<std::uint32_t>(out)};
        c.bias = record(tag_conv, bd, layer + " bias");
        return c;
    }

    PReluParams prelu(int channels, const std::string& layer) {
        const std::uint32_t d[] = {static_cast<std::uint32_t>(channels)};
        return {record(tag_prelu, d, layer)};
    }

private:
    [[noreturn]] void fail(const std::string& layer, const std::string& msg) const {
        throw FormatError("weight bank, model " + model_ + ", " + layer + ": " + msg);
    }

    ByteReader& r_;
    std::string model_;
};

} // namespace

std::vector<std::uint8_t> serialize_weight_bank(const ModelBank& bank) {
    if (bank.size() > 0xffff)
        throw ConfigError("too many models for a weight bank");
    ByteWriter w;
    w.text(std::string(magic, 4));
    w.u16(weight_bank_version);
    w.u16(static_cast<std::uint16_t>(bank.size()));
    for (const auto& [key, m] : bank) {
        m.validate();
        if (key.codec.size() > 255)
            throw ConfigError("codec id longer than 255 bytes");
        if (!is_qp_group(key.qp_group))
            throw ConfigError("qp group " + std::to_string(key.qp_group) + " is not a trained group");
        if (m.spec.io_channels != 3)
            throw ConfigError("weight bank stores 3-channel networks only");
        w.u8(static_cast<std::uint8_t>(key.codec.size()));
        w.text(key.codec);
        w.u8(static_cast<std::uint8_t>(key.version));
        w.u8(static_cast<std::uint8_t>(key.qp_group));
        w.u16(static_cast<std::uint16_t>(m.spec.n_residual_blocks));
        w.u16(static_cast<std::uint16_t>(m.spec.feature_maps));
        write_conv(w, m.head_conv);
        write_prelu(w, m.head_prelu);
        for (const auto& b : m.blocks) {
            write_conv(w, b.conv1);
            write_prelu(w, b.prelu);
            write_conv(w, b.conv2);
        }
        write_conv(w, m.post_blocks_conv);
        write_conv(w, m.tail_conv);
    }
    return w.take();
}

ModelBank parse_weight_bank(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, "weight bank");
    if (r.remaining() < 4 || r.text(4) != std::string(magic, 4))
        throw FormatError("weight bank: bad magic (expected \"VSB2\")");
    const std::uint16_t version = r.u16();
    if (version != weight_bank_version)
        throw FormatError("weight bank: unsupported format version " + std::to_string(version));
    const std::uint16_t count = r.u16();

    ModelBank bank;
    for (std::uint16_t n = 0; n < count; ++n) {
        ModelKey key;
        key.codec = r.text(r.u8());
        const std::uint8_t v = r.u8();
        if (v > 1)
            throw FormatError("weight bank: model " + std::to_string(n) + " has unknown version byte " + std::to_string(v));
        key.version = static_cast<AdaptationVersion>(v);
        key.qp_group = r.u8();
        if (!is_qp_group(key.qp_group))
            throw FormatError("weight bank: model " + std::to_string(n) + " has invalid qp group " +
                              std::to_string(key.qp_group));

        ModelWeights m;
        m.spec.n_residual_blocks = r.u16();
        m.spec.feature_maps = r.u16();
        if (m.spec.feature_maps == 0)
            throw FormatError("weight bank: model " + to_string(key) + " declares zero feature maps");
        const int f = m.spec.feature_maps;
        const int io = m.spec.io_channels;

        LayerReader layers(r, to_string(key));
        m.head_conv = layers.conv(f, io, "head conv");
        m.head_prelu = layers.prelu(f, "head prelu");
        m.blocks.resize(m.spec.n_residual_blocks);
        for (int k = 0; k < m.spec.n_residual_blocks; ++k) {
            const std::string name = "block " + std::to_string(k);
            m.blocks[k].conv1 = layers.conv(f, f, name + " conv1");
            m.blocks[k].prelu = layers.prelu(f, name + " prelu");
            m.blocks[k].conv2 = layers.conv(f, f, name + " conv2");
        }
        m.post_blocks_conv = layers.conv(f, f, "post-block conv");
        m.tail_conv = layers.conv(io, f, "tail conv");
        m.validate();

        if (!bank.emplace(key, std::move(m)).second)
            throw FormatError("weight bank: duplicate model " + to_string(key));
    }
    if (!r.at_end())
        throw FormatError("weight bank: " + std::to_string(r.remaining()) + " trailing bytes after last model");
    return bank;
}

void save_weight_bank(const ModelBank& bank, const std::string& path) {
    write_file_bytes(path, serialize_weight_bank(bank));
}

ModelBank load_weight_bank(const std::string& path) { return parse_weight_bank(read_file_bytes(path)); }

} // namespace vistra::cnn
