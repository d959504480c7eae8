#pragma once

// Feature file for codebook training: frames u32 | channels u32 |
// frames * channels float32, all little-endian, frame-major.

#include <filesystem>

#include "mscodec/frame_tensor.hpp"

namespace mscodec {

FrameTensor read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FrameTensor& features);

}  // namespace mscodec
