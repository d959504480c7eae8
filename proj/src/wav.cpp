#include "mscodec/wav.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstring>
#include <string>

#include "byte_io.hpp"
#include "mscodec/weights.hpp"

namespace mscodec {

namespace {

bool tag_is(std::span<const std::uint8_t> b, const char* tag) {
  return b.size() == 4 && std::memcmp(b.data(), tag, 4) == 0;
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioBuffer parse_wav(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!tag_is(r.take(4, "RIFF tag"), "RIFF")) throw Error(Errc::bad_magic, "wav: missing RIFF tag");
  r.u32("RIFF size");
  if (!tag_is(r.take(4, "WAVE tag"), "WAVE")) throw Error(Errc::bad_magic, "wav: missing WAVE tag");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (r.remaining() >= 8) {
    const auto id = r.take(4, "chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (tag_is(id, "fmt ")) {
      const auto body = r.take(size, "fmt chunk");
      detail::ByteReader f(body);
      format = f.u16("format tag");
      channels = f.u16("channel count");
      rate = f.u32("sample rate");
      f.u32("byte rate");
      f.u16("block align");
      bits = f.u16("bits per sample");
      if (format == kFormatExtensible && size >= 40) {
        f.u16("extension size");
        f.u16("valid bits");
        f.u32("channel mask");
        format = f.u16("subformat");
      }
      have_fmt = true;
    } else if (tag_is(id, "data")) {
      if (!have_fmt) throw Error(Errc::corrupt, "wav: data chunk before fmt chunk");
      if (channels != 1) {
        throw Error(Errc::invalid_argument, "wav: expected mono, got " + std::to_string(channels) + " channels");
      }
      if (rate == 0) throw Error(Errc::corrupt, "wav: zero sample rate");
      const auto body = r.take(size, "data chunk");
      AudioBuffer audio;
      audio.sample_rate = rate;
      if (format == kFormatPcm && bits == 16) {
        audio.samples.resize(size / 2);
        for (std::size_t i = 0; i < audio.samples.size(); ++i) {
          const auto v = static_cast<std::int16_t>(body[2 * i] | (body[2 * i + 1] << 8));
          audio.samples[i] = static_cast<float>(v) / 32768.0f;
        }
      } else if (format == kFormatFloat && bits == 32) {
        audio.samples.resize(size / 4);
        for (std::size_t i = 0; i < audio.samples.size(); ++i) {
          std::uint32_t u = 0;
          for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(body[4 * i + b]) << (8 * b);
          audio.samples[i] = std::bit_cast<float>(u);
        }
      } else {
        throw Error(Errc::invalid_argument, "wav: unsupported encoding (format " + std::to_string(format) +
                                                ", " + std::to_string(bits) + " bits)");
      }
      return audio;
    } else {
      r.take(size + (size & 1u), "chunk body");
    }
  }
  throw Error(Errc::truncated, "wav: no data chunk");
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio, WavFormat format) {
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
  const std::uint32_t bytes_per_sample = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(audio.samples.size() * bytes_per_sample);
  detail::ByteWriter w;
  w.text("RIFF");
  w.u32(36 + data_size);
  w.text("WAVE");
  w.text("fmt ");
  w.u32(16);
  w.u16(format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  w.u16(1);
  w.u32(audio.sample_rate);
  w.u32(audio.sample_rate * bytes_per_sample);
  w.u16(static_cast<std::uint16_t>(bytes_per_sample));
  w.u16(bits);
  w.text("data");
  w.u32(data_size);
  for (float s : audio.samples) {
    if (format == WavFormat::pcm16) {
      const float c = std::clamp(s, -1.0f, 1.0f);
      const auto v = static_cast<std::int16_t>(std::lrint(std::min(c * 32768.0f, 32767.0f)));
      w.u16(static_cast<std::uint16_t>(v));
    } else {
      w.f32(s);
    }
  }
  return std::move(w.buffer());
}

AudioBuffer read_wav(const std::filesystem::path& path) { return parse_wav(read_file(path)); }

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavFormat format) {
  write_file(path, encode_wav(audio, format));
}

}  // namespace mscodec
