#include "mscodec/bitstream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "byte_io.hpp"

namespace mscodec {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'C', 'B'};

void check_header(const BitstreamHeader& h) {
  if (h.bits_per_token == 0 || h.bits_per_token > 32) {
    throw Error(Errc::corrupt, "bitstream: bits per token must be in [1, 32]");
  }
  for (std::size_t i = 0; i < h.strides.size(); ++i) {
    if (h.strides[i] == 0) throw Error(Errc::corrupt, "bitstream: zero stride");
    if (h.latent_frames % h.strides[i] != 0) {
      throw Error(Errc::corrupt, "bitstream: latent frame count " + std::to_string(h.latent_frames) +
                                     " not divisible by stride " + std::to_string(h.strides[i]));
    }
  }
  if (h.strides.size() > 255) throw Error(Errc::invalid_argument, "bitstream: more than 255 levels");
}

}  // namespace

std::vector<std::size_t> BitstreamHeader::level_lengths() const {
  std::vector<std::size_t> out;
  for (auto s : strides) out.push_back(s ? latent_frames / s : 0);
  return out;
}

std::size_t BitstreamHeader::payload_bits() const {
  const auto lengths = level_lengths();
  return bits_per_token * std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
}

BitstreamHeader make_header(const CodecConfig& config, std::size_t original_samples,
                            std::size_t latent_frames) {
  BitstreamHeader h;
  h.preset_id = preset_id(config);
  h.bits_per_token = static_cast<std::uint8_t>(config.bits_per_token());
  h.config_hash = config.hash();
  h.sample_rate = config.sample_rate;
  h.hop = static_cast<std::uint32_t>(config.hop());
  h.original_sample_count = original_samples;
  h.latent_frames = static_cast<std::uint32_t>(latent_frames);
  for (auto s : config.vq_strides) h.strides.push_back(static_cast<std::uint32_t>(s));
  return h;
}

std::vector<std::uint8_t> pack(const MultiScaleCodes& codes, const BitstreamHeader& header) {
  check_header(header);
  if (codes.levels.size() != header.strides.size()) {
    throw Error(Errc::config_mismatch, "pack: codes have " + std::to_string(codes.levels.size()) +
                                           " levels, header declares " +
                                           std::to_string(header.strides.size()));
  }
  const auto lengths = header.level_lengths();
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (codes.levels[i].size() != lengths[i]) {
      throw Error(Errc::config_mismatch, "pack: level " + std::to_string(i) + " has " +
                                             std::to_string(codes.levels[i].size()) +
                                             " tokens, header implies " + std::to_string(lengths[i]));
    }
  }

  detail::ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kBitstreamVersion);
  w.u8(header.preset_id);
  w.u8(header.bits_per_token);
  w.u64(header.config_hash);
  w.u32(header.sample_rate);
  w.u32(header.hop);
  w.u64(header.original_sample_count);
  w.u32(header.latent_frames);
  w.u8(static_cast<std::uint8_t>(header.strides.size()));
  for (auto s : header.strides) w.u32(s);

  const unsigned B = header.bits_per_token;
  const std::uint64_t limit = std::uint64_t{1} << B;
  std::uint64_t acc = 0;
  unsigned pending = 0;
  for (std::size_t i = 0; i < codes.levels.size(); ++i) {
    for (Token tok : codes.levels[i]) {
      if (tok >= limit) {
        throw Error(Errc::out_of_range, "pack: token " + std::to_string(tok) + " in level " +
                                            std::to_string(i) + " does not fit in " +
                                            std::to_string(B) + " bits");
      }
      acc = (acc << B) | tok;
      pending += B;
      while (pending >= 8) {
        w.u8(static_cast<std::uint8_t>(acc >> (pending - 8)));
        pending -= 8;
      }
      acc &= (std::uint64_t{1} << pending) - 1;
    }
  }
  if (pending > 0) w.u8(static_cast<std::uint8_t>(acc << (8 - pending)));
  return std::move(w.buffer());
}

UnpackedStream unpack(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw Error(Errc::bad_magic, "bitstream: bad magic, not an MSCB stream");
  }
  const std::uint16_t version = r.u16("format version");
  if (version != kBitstreamVersion) {
    throw Error(Errc::bad_version, "bitstream: unsupported format version " + std::to_string(version));
  }
  UnpackedStream out;
  BitstreamHeader& h = out.header;
  h.preset_id = r.u8("preset id");
  h.bits_per_token = r.u8("bits per token");
  h.config_hash = r.u64("config hash");
  h.sample_rate = r.u32("sample rate");
  h.hop = r.u32("hop");
  h.original_sample_count = r.u64("original sample count");
  h.latent_frames = r.u32("latent frame count");
  const std::uint8_t n = r.u8("level count");
  for (std::uint8_t i = 0; i < n; ++i) h.strides.push_back(r.u32("level stride"));
  check_header(h);

  const std::size_t bits = h.payload_bits();
  const std::size_t payload_bytes = (bits + 7) / 8;
  if (r.remaining() < payload_bytes) {
    throw Error(Errc::truncated, "bitstream: payload underrun at byte offset " +
                                     std::to_string(bytes.size()) + ": expected " +
                                     std::to_string(r.offset() + payload_bytes) + " bytes");
  }
  if (r.remaining() > payload_bytes) {
    throw Error(Errc::corrupt, "bitstream: " + std::to_string(r.remaining() - payload_bytes) +
                                   " unexpected trailing bytes at offset " +
                                   std::to_string(r.offset() + payload_bytes));
  }
  const auto payload = r.take(payload_bytes, "payload");

  const unsigned B = h.bits_per_token;
  std::size_t byte = 0;
  std::uint64_t acc = 0;
  unsigned have = 0;
  for (std::size_t len : h.level_lengths()) {
    std::vector<Token> level(len);
    for (auto& tok : level) {
      while (have < B) {
        acc = (acc << 8) | payload[byte++];
        have += 8;
      }
      tok = static_cast<Token>((acc >> (have - B)) & ((std::uint64_t{1} << B) - 1));
      have -= B;
      acc &= (std::uint64_t{1} << have) - 1;
    }
    out.codes.levels.push_back(std::move(level));
  }
  if (have > 0 && acc != 0) {
    throw Error(Errc::corrupt, "bitstream: nonzero padding bits in final byte at offset " +
                                   std::to_string(bytes.size() - 1));
  }
  return out;
}

Bitrate exact_bitrate(unsigned bits_per_token, std::uint64_t sample_rate, std::uint64_t hop,
                      std::span<const std::size_t> strides) {
  // B * sr * sum(L / W_i) / (hop * L) with L = lcm(W_i) keeps everything integral.
  std::uint64_t l = 1;
  for (auto s : strides) l = std::lcm(l, static_cast<std::uint64_t>(s));
  std::uint64_t weight = 0;
  for (auto s : strides) weight += l / s;
  Bitrate b{bits_per_token * sample_rate * weight, hop * l};
  const std::uint64_t g = std::gcd(b.numerator, b.denominator);
  if (g > 1) {
    b.numerator /= g;
    b.denominator /= g;
  }
  return b;
}

Bitrate exact_bitrate(const CodecConfig& config) {
  return exact_bitrate(config.bits_per_token(), config.sample_rate, config.hop(), config.vq_strides);
}

Bitrate exact_bitrate(const BitstreamHeader& header) {
  std::vector<std::size_t> strides(header.strides.begin(), header.strides.end());
  return exact_bitrate(header.bits_per_token, header.sample_rate, header.hop, strides);
}

double bitrate(const CodecConfig& config) { return exact_bitrate(config).bps(); }

std::string format_bitrate(double bps) {
  char buf[64];
  if (bps >= 1000.0) {
    std::snprintf(buf, sizeof buf, "%.1f kbps", bps / 1000.0);
  } else {
    std::snprintf(buf, sizeof buf, "%.0f bps", bps);
  }
  return buf;
}

}  // namespace mscodec
