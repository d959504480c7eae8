#include "mscodec/weights.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <string>

#include "byte_io.hpp"

namespace mscodec {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'A', 'C'};

std::string shape_text(const TensorShape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const Codec& codec) {
  detail::ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kWeightFormatVersion);
  const std::string cfg = codec.config().canonical_json();
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.text(cfg);

  std::uint32_t count = 0;
  codec.for_each_parameter([&](const std::string&, const TensorShape&, std::span<const float>) { ++count; });
  w.u32(count);
  codec.for_each_parameter([&](const std::string& name, const TensorShape& shape, std::span<const float> data) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.text(name);
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : data) w.f32(v);
  });
  return std::move(w.buffer());
}

Codec deserialize_weights(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw Error(Errc::bad_magic, "weights: bad magic, not an MSAC weight file");
  }
  const std::uint32_t version = r.u32("format version");
  if (version != kWeightFormatVersion) {
    throw Error(Errc::bad_version, "weights: unsupported format version " + std::to_string(version));
  }
  const std::uint32_t cfg_len = r.u32("config length");
  const auto cfg_bytes = r.take(cfg_len, "config");
  const CodecConfig config = CodecConfig::from_json(
      std::string_view(reinterpret_cast<const char*>(cfg_bytes.data()), cfg_bytes.size()));

  Codec codec = Codec::zeros(config);
  const std::uint32_t count = r.u32("tensor count");
  std::uint32_t expected = 0;
  codec.for_each_parameter([&](const std::string&, const TensorShape&, std::span<float>) { ++expected; });
  if (count != expected) {
    throw Error(Errc::shape_mismatch, "weights: file has " + std::to_string(count) +
                                          " tensors, config implies " + std::to_string(expected));
  }

  codec.for_each_parameter([&](const std::string& name, const TensorShape& shape, std::span<float> data) {
    const std::string ctx = "tensor '" + name + "'";
    const std::uint16_t name_len = r.u16("tensor name length");
    const auto name_bytes = r.take(name_len, ctx + " name");
    const std::string got(name_bytes.begin(), name_bytes.end());
    if (got != name) {
      throw Error(Errc::shape_mismatch, "weights: expected tensor '" + name + "', found '" + got + "'");
    }
    const std::uint8_t rank = r.u8("tensor rank");
    TensorShape dims(rank);
    for (auto& d : dims) d = r.u32("tensor dims");
    if (dims != shape) {
      throw Error(Errc::shape_mismatch, "weights: " + ctx + " has shape " + shape_text(dims) +
                                            ", config implies " + shape_text(shape));
    }
    const auto raw = r.take(data.size() * 4, ctx + " data");
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
      data[i] = std::bit_cast<float>(bits);
    }
  });
  if (r.remaining() != 0) {
    throw Error(Errc::corrupt, "weights: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  codec.finalize();
  return codec;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write to '" + path.string() + "' failed");
}

void save_weights(const Codec& codec, const std::filesystem::path& path) {
  write_file(path, serialize_weights(codec));
}

Codec load_weights(const std::filesystem::path& path) { return deserialize_weights(read_file(path)); }

}  // namespace mscodec
