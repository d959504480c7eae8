#include "mscodec/features.hpp"

#include <bit>
#include <string>

#include "byte_io.hpp"
#include "mscodec/weights.hpp"

namespace mscodec {

FrameTensor read_features(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  detail::ByteReader r(bytes);
  const std::uint32_t frames = r.u32("frame count");
  const std::uint32_t channels = r.u32("channel count");
  const std::uint64_t count = std::uint64_t{frames} * channels;
  if (r.remaining() != count * 4) {
    throw Error(r.remaining() < count * 4 ? Errc::truncated : Errc::corrupt,
                "features: header declares " + std::to_string(frames) + " x " + std::to_string(channels) +
                    " floats, file holds " + std::to_string(r.remaining()) + " payload bytes");
  }
  std::vector<float> data(count);
  const auto raw = r.take(count * 4, "feature data");
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(raw[4 * i + b]) << (8 * b);
    data[i] = std::bit_cast<float>(u);
  }
  return FrameTensor(frames, channels, std::move(data));
}

void write_features(const std::filesystem::path& path, const FrameTensor& features) {
  detail::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(features.frames()));
  w.u32(static_cast<std::uint32_t>(features.channels()));
  for (float v : features.data()) w.f32(v);
  write_file(path, w.buffer());
}

}  // namespace mscodec
