#pragma once

// Deterministic 1-D signal kernels on FrameTensor. Every function here is a
// pure function of its arguments; accumulation is done in double and the
// result rounded once to float.

#include <cstddef>
#include <span>
#include <vector>

#include "mscodec/frame_tensor.hpp"

namespace mscodec {

/// Convolution layer description shared by conv1d and transposed_conv1d.
/// Weights are laid out out_channels x (in_channels / groups) x kernel_size;
/// weight(o, i, k) connects input channel (group(o) * in_per_group + i) to
/// output channel o in both directions.
struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 1;
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t groups = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
  std::vector<float> weights;
  std::vector<float> bias;  // empty means no bias

  std::size_t in_per_group() const { return in_channels / groups; }
  std::size_t out_per_group() const { return out_channels / groups; }
  std::size_t weight_count() const { return out_channels * in_per_group() * kernel_size; }
  bool depthwise() const { return groups == in_channels && groups == out_channels; }

  float weight(std::size_t o, std::size_t i, std::size_t k) const {
    return weights[(o * in_per_group() + i) * kernel_size + k];
  }
  float& weight(std::size_t o, std::size_t i, std::size_t k) {
    return weights[(o * in_per_group() + i) * kernel_size + k];
  }

  /// Throws Errc::invalid_argument on any structural inconsistency.
  void validate() const;
};

/// Dense map y = W x + b applied per frame; W is out x in row-major.
struct Linear {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::vector<float> weight;
  std::vector<float> bias;  // empty means no bias

  static Linear identity(std::size_t n);
  static Linear zeros(std::size_t in, std::size_t out, bool with_bias);
  void validate() const;
};

struct AttentionParams {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
};

std::size_t conv_output_frames(std::size_t frames, const ConvSpec& spec);
std::size_t transposed_conv_output_frames(std::size_t frames, const ConvSpec& spec);

FrameTensor conv1d(const FrameTensor& x, const ConvSpec& spec);
FrameTensor transposed_conv1d(const FrameTensor& x, const ConvSpec& spec);

FrameTensor avg_pool(const FrameTensor& x, std::size_t factor);
FrameTensor nn_upsample(const FrameTensor& x, std::size_t factor);

/// x + sin^2(alpha * x) / alpha with one alpha per channel.
FrameTensor snake(const FrameTensor& x, std::span<const float> alpha);
FrameTensor leaky_relu(const FrameTensor& x, float negative_slope = 0.01f);
FrameTensor tanh(const FrameTensor& x);

FrameTensor linear(const FrameTensor& x, const Linear& layer);
std::vector<float> linear(std::span<const float> v, const Linear& layer);

FrameTensor add(const FrameTensor& a, const FrameTensor& b);
FrameTensor subtract(const FrameTensor& a, const FrameTensor& b);

/// Row-stochastic T x T matrix (row-major, doubles) of single-head
/// scaled dot-product weights where frame t only sees frames s with
/// |s - t| < window. Entries outside the window are exactly zero.
std::vector<double> attention_weights(const FrameTensor& x, const AttentionParams& params,
                                      std::size_t window);

/// Single-head local windowed self-attention, followed by the output
/// projection. Non-causal: the window is symmetric around each frame.
FrameTensor local_windowed_attention(const FrameTensor& x, const AttentionParams& params,
                                     std::size_t window);

}  // namespace mscodec
