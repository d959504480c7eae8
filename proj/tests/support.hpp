#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "mscodec/kernels.hpp"
#include "mscodec/msrvq.hpp"

namespace testing_support {

using Rng = std::mt19937_64;

inline float uniform(Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  return std::uniform_real_distribution<float>(lo, hi)(rng);
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline mscodec::FrameTensor random_tensor(Rng& rng, std::size_t frames, std::size_t channels,
                                          float scale = 1.0f) {
  std::vector<float> v(frames * channels);
  for (float& x : v) x = uniform(rng, -scale, scale);
  return mscodec::FrameTensor(frames, channels, std::move(v));
}

inline mscodec::Linear random_linear(Rng& rng, std::size_t in, std::size_t out, bool bias) {
  mscodec::Linear l = mscodec::Linear::zeros(in, out, bias);
  for (float& w : l.weight) w = uniform(rng);
  for (float& b : l.bias) b = uniform(rng, -0.5f, 0.5f);
  return l;
}

inline mscodec::AttentionParams random_attention(Rng& rng, std::size_t channels) {
  return {random_linear(rng, channels, channels, false), random_linear(rng, channels, channels, false),
          random_linear(rng, channels, channels, false), random_linear(rng, channels, channels, false)};
}

// Random depthwise conv with random kernel, dilation, stride, padding, bias.
inline mscodec::ConvSpec random_depthwise(Rng& rng, std::size_t channels) {
  mscodec::ConvSpec s;
  s.in_channels = s.out_channels = s.groups = channels;
  s.kernel_size = pick(rng, 1, 7);
  s.dilation = pick(rng, 1, 3);
  s.stride = pick(rng, 1, 3);
  s.pad_left = pick(rng, 0, 4);
  s.pad_right = pick(rng, 0, 4);
  s.weights.resize(s.weight_count());
  for (float& w : s.weights) w = uniform(rng);
  if (rng() & 1u) {
    s.bias.resize(channels);
    for (float& b : s.bias) b = uniform(rng);
  }
  return s;
}

// Random grouped transposed-conv spec; crop kept small enough to leave output.
inline mscodec::ConvSpec random_transposed(Rng& rng) {
  mscodec::ConvSpec s;
  s.groups = pick(rng, 1, 2);
  s.in_channels = s.groups * pick(rng, 1, 3);
  s.out_channels = s.groups * pick(rng, 1, 3);
  s.stride = pick(rng, 1, 4);
  s.kernel_size = pick(rng, 1, 2 * s.stride + 1);
  s.dilation = pick(rng, 1, 2);
  s.pad_left = pick(rng, 0, s.kernel_size / 2);
  s.pad_right = pick(rng, 0, s.kernel_size / 2);
  s.weights.resize(s.weight_count());
  for (float& w : s.weights) w = uniform(rng);
  if (rng() & 1u) {
    s.bias.resize(s.out_channels);
    for (float& b : s.bias) b = uniform(rng);
  }
  return s;
}

inline mscodec::QuantizerLevel random_level(Rng& rng, std::size_t stride, std::size_t K, std::size_t C,
                                            std::size_t D) {
  mscodec::QuantizerLevel level;
  level.config = {stride, K, D};
  level.codebook.entries = random_tensor(rng, K, D);
  level.codebook.in_proj = random_linear(rng, C, D, true);
  level.codebook.out_proj = random_linear(rng, D, C, true);
  return level;
}

struct Clusters {
  mscodec::FrameTensor points;
  std::vector<std::size_t> label;
  // Mean squared distance of each point to the sample mean of its cluster.
  double within_variance = 0.0;
};

// `per_cluster` points around each of four centres spaced far apart.
inline Clusters four_gaussians(Rng& rng, std::size_t per_cluster, std::size_t dim, double sigma = 0.3) {
  std::normal_distribution<double> noise(0.0, sigma);
  const std::size_t N = 4 * per_cluster;
  Clusters out{mscodec::FrameTensor(N, dim), std::vector<std::size_t>(N), 0.0};
  std::vector<std::size_t> order(N);
  for (std::size_t i = 0; i < N; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t c = i % 4;
    const std::size_t n = order[i];
    out.label[n] = c;
    for (std::size_t j = 0; j < dim; ++j) {
      const double centre = j < 2 ? 10.0 * ((j == 0 ? c : c >> 1) & 1) : 0.0;
      out.points(n, j) = static_cast<float>(centre + noise(rng));
    }
  }
  std::vector<double> mean(4 * dim, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t j = 0; j < dim; ++j) mean[out.label[n] * dim + j] += out.points(n, j) / per_cluster;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = out.points(n, j) - mean[out.label[n] * dim + j];
      out.within_variance += d * d / static_cast<double>(N);
    }
  return out;
}

// Mean over frames of the squared L2 norm.
inline double mean_energy(const mscodec::FrameTensor& x) {
  double s = 0.0;
  for (float v : x.data()) s += double(v) * v;
  return x.frames() ? s / static_cast<double>(x.frames()) : 0.0;
}

}  // namespace testing_support
