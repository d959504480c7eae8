#pragma once

// Weight file layout (little-endian, no padding):
//
//   "MSAC" | version u32 | config length u32 | canonical config JSON |
//   tensor count u32 | tensors...
//
// and each tensor is
//
//   name length u16 | name | rank u8 | dims u32 x rank | float32 data
//
// Tensors are written in Codec::for_each_parameter order. Readers reject
// unknown versions and any tensor whose name or shape disagrees with the
// codec the embedded config describes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mscodec/codec.hpp"

namespace mscodec {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::vector<std::uint8_t> serialize_weights(const Codec& codec);
Codec deserialize_weights(std::span<const std::uint8_t> bytes);

void save_weights(const Codec& codec, const std::filesystem::path& path);
Codec load_weights(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mscodec
