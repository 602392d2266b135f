#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vistra/cnn.hpp"

namespace vistra::cnn {

// Model bank file ("VSB2"), all integers little-endian:
//
//   "VSB2" | format version u16 | model count u16
//   per model:
//     codec id length u8, codec id bytes | version u8 (0 EBD, 1 SR_EBD) | qp group u8
//     residual blocks u16 | feature maps u16
//     layer records in topology order:
//       head conv, head prelu, {conv1, prelu, conv2} per block, post-block conv, tail conv
//   layer record: tag u8 (0 conv, 1 prelu) | rank u8 | dims u32 x rank | float32 payload, row-major
//
// A conv layer is two records tagged 0: weights [out][in][3][3], then bias [out].
inline constexpr std::uint16_t weight_bank_version = 1;

std::vector<std::uint8_t> serialize_weight_bank(const ModelBank& bank);
ModelBank parse_weight_bank(std::span<const std::uint8_t> bytes);

void save_weight_bank(const ModelBank& bank, const std::string& path);
ModelBank load_weight_bank(const std::string& path);

} // namespace vistra::cnn
