#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mscodec/codec.hpp"

namespace mscodec {

enum class WavFormat { pcm16, float32 };

/// Mono RIFF/WAVE, 16-bit integer PCM or 32-bit IEEE float. Multi-channel
/// files are rejected rather than downmixed.
AudioBuffer parse_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio, WavFormat format = WavFormat::float32);

AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               WavFormat format = WavFormat::float32);

}  // namespace mscodec
