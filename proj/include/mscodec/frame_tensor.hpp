#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mscodec/error.hpp"

namespace mscodec {

/// A frames x channels sequence of 32-bit floats stored frame-major, so
/// `frame(t)` is a contiguous span of `channels()` values.
class FrameTensor {
 public:
  FrameTensor() = default;

  FrameTensor(std::size_t frames, std::size_t channels, float fill = 0.0f)
      : frames_(frames), channels_(channels), data_(frames * channels, fill) {}

  FrameTensor(std::size_t frames, std::size_t channels, std::vector<float> data)
      : frames_(frames), channels_(channels), data_(std::move(data)) {
    if (data_.size() != frames_ * channels_) {
      throw Error(Errc::shape_mismatch,
                  "FrameTensor: data length does not equal frames * channels");
    }
  }

  std::size_t frames() const noexcept { return frames_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t t, std::size_t c) { return data_[t * channels_ + c]; }
  float operator()(std::size_t t, std::size_t c) const { return data_[t * channels_ + c]; }

  std::span<float> frame(std::size_t t) { return {data_.data() + t * channels_, channels_}; }
  std::span<const float> frame(std::size_t t) const {
    return {data_.data() + t * channels_, channels_};
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const FrameTensor&, const FrameTensor&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

}  // namespace mscodec
