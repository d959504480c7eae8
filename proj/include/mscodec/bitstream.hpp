#pragma once

// Packed token stream.
//
// Header (little-endian, 37 + 4 * N bytes):
//
//   offset  size  field
//        0     4  magic "MSCB"
//        4     2  format version (1)
//        6     1  preset id (0 = custom config)
//        7     1  bits per token B
//        8     8  config hash (FNV-1a 64 of the canonical config JSON)
//       16     4  sample rate (Hz)
//       20     4  hop (samples per latent frame)
//       24     8  original sample count (before padding)
//       32     4  latent frame count T
//       36     1  level count N
//       37   4*N  per-level stride W_i
//
// Payload: levels in order (coarsest first), T / W_i tokens each, every
// token written as B bits MSB-first; the final byte is zero-padded.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mscodec/config.hpp"
#include "mscodec/msrvq.hpp"

namespace mscodec {

inline constexpr std::uint16_t kBitstreamVersion = 1;

struct BitstreamHeader {
  std::uint8_t preset_id = 0;
  std::uint8_t bits_per_token = 12;
  std::uint64_t config_hash = 0;
  std::uint32_t sample_rate = 0;
  std::uint32_t hop = 0;
  std::uint64_t original_sample_count = 0;
  std::uint32_t latent_frames = 0;
  std::vector<std::uint32_t> strides;

  std::size_t serialized_size() const { return 37 + 4 * strides.size(); }
  std::vector<std::size_t> level_lengths() const;
  std::size_t payload_bits() const;

  friend bool operator==(const BitstreamHeader&, const BitstreamHeader&) = default;
};

BitstreamHeader make_header(const CodecConfig& config, std::size_t original_samples,
                            std::size_t latent_frames);

std::vector<std::uint8_t> pack(const MultiScaleCodes& codes, const BitstreamHeader& header);

struct UnpackedStream {
  MultiScaleCodes codes;
  BitstreamHeader header;
};

UnpackedStream unpack(std::span<const std::uint8_t> bytes);

/// Bits per second as an exact fraction: B * sum_i sample_rate / (hop * W_i).
struct Bitrate {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;

  double bps() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const Bitrate&, const Bitrate&) = default;
};

Bitrate exact_bitrate(unsigned bits_per_token, std::uint64_t sample_rate, std::uint64_t hop,
                      std::span<const std::size_t> strides);
Bitrate exact_bitrate(const CodecConfig& config);
Bitrate exact_bitrate(const BitstreamHeader& header);

double bitrate(const CodecConfig& config);

/// "2.6 kbps" at or above 1000 bps (one decimal), "984 bps" below.
std::string format_bitrate(double bps);

}  // namespace mscodec
