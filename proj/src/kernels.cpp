#include "mscodec/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mscodec {

bool FrameTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::divisibility: return "divisibility";
    case Errc::out_of_range: return "out_of_range";
    case Errc::sample_rate_mismatch: return "sample_rate_mismatch";
    case Errc::empty_input: return "empty_input";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::bad_magic: return "bad_magic";
    case Errc::bad_version: return "bad_version";
    case Errc::truncated: return "truncated";
    case Errc::corrupt: return "corrupt";
    case Errc::config_mismatch: return "config_mismatch";
    case Errc::io: return "io";
  }
  return "unknown";
}

void ConvSpec::validate() const {
  if (in_channels == 0 || out_channels == 0 || kernel_size == 0 || stride == 0 ||
      dilation == 0 || groups == 0) {
    throw Error(Errc::invalid_argument, "ConvSpec: sizes, stride, dilation and groups must be >= 1");
  }
  if (in_channels % groups != 0 || out_channels % groups != 0) {
    throw Error(Errc::invalid_argument, "ConvSpec: channels must be divisible by groups");
  }
  if (weights.size() != weight_count()) {
    throw Error(Errc::invalid_argument,
                "ConvSpec: expected " + std::to_string(weight_count()) + " weights, got " +
                    std::to_string(weights.size()));
  }
  if (!bias.empty() && bias.size() != out_channels) {
    throw Error(Errc::invalid_argument, "ConvSpec: bias length must equal out_channels");
  }
}

Linear Linear::identity(std::size_t n) {
  Linear l = zeros(n, n, true);
  for (std::size_t i = 0; i < n; ++i) l.weight[i * n + i] = 1.0f;
  return l;
}

Linear Linear::zeros(std::size_t in, std::size_t out, bool with_bias) {
  Linear l;
  l.in_features = in;
  l.out_features = out;
  l.weight.assign(in * out, 0.0f);
  if (with_bias) l.bias.assign(out, 0.0f);
  return l;
}

void Linear::validate() const {
  if (weight.size() != in_features * out_features) {
    throw Error(Errc::invalid_argument, "Linear: weight size does not match in x out");
  }
  if (!bias.empty() && bias.size() != out_features) {
    throw Error(Errc::invalid_argument, "Linear: bias length must equal out_features");
  }
}

namespace {

void check_input(const FrameTensor& x, const ConvSpec& spec) {
  spec.validate();
  if (x.channels() != spec.in_channels) {
    throw Error(Errc::shape_mismatch, "conv: input has " + std::to_string(x.channels()) +
                                          " channels, spec expects " +
                                          std::to_string(spec.in_channels));
  }
}

// Rearranges weights to [group][k][i][o_in_group] so the innermost loop runs
// over contiguous output channels.
std::vector<float> weights_by_tap(const ConvSpec& spec) {
  const std::size_t ipg = spec.in_per_group();
  const std::size_t opg = spec.out_per_group();
  const std::size_t K = spec.kernel_size;
  std::vector<float> w(spec.weight_count());
  for (std::size_t o = 0; o < spec.out_channels; ++o) {
    const std::size_t g = o / opg;
    const std::size_t ol = o % opg;
    for (std::size_t i = 0; i < ipg; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        w[((g * K + k) * ipg + i) * opg + ol] = spec.weight(o, i, k);
      }
    }
  }
  return w;
}

void init_with_bias(std::span<double> acc, const std::vector<float>& bias) {
  if (bias.empty()) {
    std::fill(acc.begin(), acc.end(), 0.0);
  } else {
    std::copy(bias.begin(), bias.end(), acc.begin());
  }
}

FrameTensor depthwise_conv(const FrameTensor& x, const ConvSpec& spec, std::size_t out_frames) {
  const std::size_t C = spec.in_channels;
  const std::size_t K = spec.kernel_size;
  std::vector<float> taps(C * K);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t k = 0; k < K; ++k) taps[k * C + c] = spec.weight(c, 0, k);

  FrameTensor y(out_frames, C);
  std::vector<double> acc(C);
  const auto T = static_cast<std::ptrdiff_t>(x.frames());
  for (std::size_t t = 0; t < out_frames; ++t) {
    init_with_bias(acc, spec.bias);
    for (std::size_t k = 0; k < K; ++k) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * spec.stride + k * spec.dilation) -
                                 static_cast<std::ptrdiff_t>(spec.pad_left);
      if (pos < 0 || pos >= T) continue;
      const float* xr = x.frame(static_cast<std::size_t>(pos)).data();
      const float* wr = taps.data() + k * C;
      for (std::size_t c = 0; c < C; ++c) acc[c] += static_cast<double>(wr[c]) * xr[c];
    }
    float* yr = y.frame(t).data();
    for (std::size_t c = 0; c < C; ++c) yr[c] = static_cast<float>(acc[c]);
  }
  return y;
}

}  // namespace

std::size_t conv_output_frames(std::size_t frames, const ConvSpec& spec) {
  const std::size_t padded = frames + spec.pad_left + spec.pad_right;
  const std::size_t extent = spec.dilation * (spec.kernel_size - 1) + 1;
  if (padded < extent) return 0;
  return (padded - extent) / spec.stride + 1;
}

std::size_t transposed_conv_output_frames(std::size_t frames, const ConvSpec& spec) {
  if (frames == 0) return 0;
  const std::size_t full = (frames - 1) * spec.stride + spec.dilation * (spec.kernel_size - 1) + 1;
  if (full <= spec.pad_left + spec.pad_right) return 0;
  return full - spec.pad_left - spec.pad_right;
}

FrameTensor conv1d(const FrameTensor& x, const ConvSpec& spec) {
  check_input(x, spec);
  const std::size_t out_frames = conv_output_frames(x.frames(), spec);
  if (out_frames == 0) {
    throw Error(Errc::invalid_argument, "conv1d: padded input of " + std::to_string(x.frames()) +
                                            " frames is shorter than the kernel extent");
  }
  if (spec.depthwise()) return depthwise_conv(x, spec, out_frames);

  const std::size_t ipg = spec.in_per_group();
  const std::size_t opg = spec.out_per_group();
  const std::size_t K = spec.kernel_size;
  const std::vector<float> w = weights_by_tap(spec);
  const auto T = static_cast<std::ptrdiff_t>(x.frames());

  FrameTensor y(out_frames, spec.out_channels);
  std::vector<double> acc(spec.out_channels);
  for (std::size_t t = 0; t < out_frames; ++t) {
    init_with_bias(acc, spec.bias);
    for (std::size_t k = 0; k < K; ++k) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * spec.stride + k * spec.dilation) -
                                 static_cast<std::ptrdiff_t>(spec.pad_left);
      if (pos < 0 || pos >= T) continue;
      const float* xr = x.frame(static_cast<std::size_t>(pos)).data();
      for (std::size_t g = 0; g < spec.groups; ++g) {
        double* ag = acc.data() + g * opg;
        const float* wg = w.data() + (g * K + k) * ipg * opg;
        for (std::size_t i = 0; i < ipg; ++i) {
          const double xv = xr[g * ipg + i];
          const float* wr = wg + i * opg;
          for (std::size_t o = 0; o < opg; ++o) ag[o] += static_cast<double>(wr[o]) * xv;
        }
      }
    }
    float* yr = y.frame(t).data();
    for (std::size_t o = 0; o < spec.out_channels; ++o) yr[o] = static_cast<float>(acc[o]);
  }
  return y;
}

FrameTensor transposed_conv1d(const FrameTensor& x, const ConvSpec& spec) {
  check_input(x, spec);
  const std::size_t out_frames = transposed_conv_output_frames(x.frames(), spec);
  if (out_frames == 0) {
    throw Error(Errc::invalid_argument, "transposed_conv1d: non-positive output length");
  }
  const std::size_t ipg = spec.in_per_group();
  const std::size_t opg = spec.out_per_group();
  const std::size_t K = spec.kernel_size;
  const std::size_t C_out = spec.out_channels;
  const std::vector<float> w = weights_by_tap(spec);

  const std::size_t full = (x.frames() - 1) * spec.stride + spec.dilation * (K - 1) + 1;
  std::vector<double> acc(full * C_out, 0.0);
  for (std::size_t t = 0; t < x.frames(); ++t) {
    const float* xr = x.frame(t).data();
    for (std::size_t k = 0; k < K; ++k) {
      double* row = acc.data() + (t * spec.stride + k * spec.dilation) * C_out;
      for (std::size_t g = 0; g < spec.groups; ++g) {
        double* ag = row + g * opg;
        const float* wg = w.data() + (g * K + k) * ipg * opg;
        for (std::size_t i = 0; i < ipg; ++i) {
          const double xv = xr[g * ipg + i];
          const float* wr = wg + i * opg;
          for (std::size_t o = 0; o < opg; ++o) ag[o] += static_cast<double>(wr[o]) * xv;
        }
      }
    }
  }

  FrameTensor y(out_frames, C_out);
  for (std::size_t t = 0; t < out_frames; ++t) {
    const double* src = acc.data() + (t + spec.pad_left) * C_out;
    float* yr = y.frame(t).data();
    for (std::size_t o = 0; o < C_out; ++o) {
      const double b = spec.bias.empty() ? 0.0 : spec.bias[o];
      yr[o] = static_cast<float>(src[o] + b);
    }
  }
  return y;
}

FrameTensor avg_pool(const FrameTensor& x, std::size_t factor) {
  if (factor == 0) throw Error(Errc::invalid_argument, "avg_pool: factor must be >= 1");
  if (x.frames() % factor != 0) {
    throw Error(Errc::divisibility, "avg_pool: " + std::to_string(x.frames()) +
                                        " frames not divisible by " + std::to_string(factor));
  }
  if (factor == 1) return x;
  const std::size_t C = x.channels();
  FrameTensor y(x.frames() / factor, C);
  std::vector<double> acc(C);
  for (std::size_t t = 0; t < y.frames(); ++t) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < factor; ++j) {
      const float* xr = x.frame(t * factor + j).data();
      for (std::size_t c = 0; c < C; ++c) acc[c] += xr[c];
    }
    float* yr = y.frame(t).data();
    for (std::size_t c = 0; c < C; ++c) yr[c] = static_cast<float>(acc[c] / static_cast<double>(factor));
  }
  return y;
}

FrameTensor nn_upsample(const FrameTensor& x, std::size_t factor) {
  if (factor == 0) throw Error(Errc::invalid_argument, "nn_upsample: factor must be >= 1");
  if (factor == 1) return x;
  FrameTensor y(x.frames() * factor, x.channels());
  for (std::size_t t = 0; t < y.frames(); ++t) {
    const auto src = x.frame(t / factor);
    std::copy(src.begin(), src.end(), y.frame(t).begin());
  }
  return y;
}

FrameTensor snake(const FrameTensor& x, std::span<const float> alpha) {
  const std::size_t C = x.channels();
  if (alpha.size() != C) throw Error(Errc::shape_mismatch, "snake: alpha length != channels");
  for (float a : alpha) {
    if (!(a > 0.0f)) throw Error(Errc::invalid_argument, "snake: alpha must be positive");
  }
  FrameTensor y(x.frames(), C);
  for (std::size_t t = 0; t < x.frames(); ++t) {
    const float* xr = x.frame(t).data();
    float* yr = y.frame(t).data();
    for (std::size_t c = 0; c < C; ++c) {
      const double a = alpha[c];
      const double v = xr[c];
      const double s = std::sin(a * v);
      yr[c] = static_cast<float>(v + s * s / a);
    }
  }
  return y;
}

FrameTensor leaky_relu(const FrameTensor& x, float negative_slope) {
  FrameTensor y = x;
  for (float& v : y.data()) v = v >= 0.0f ? v : v * negative_slope;
  return y;
}

FrameTensor tanh(const FrameTensor& x) {
  FrameTensor y = x;
  for (float& v : y.data()) v = std::tanh(v);
  return y;
}

std::vector<float> linear(std::span<const float> v, const Linear& layer) {
  if (v.size() != layer.in_features) {
    throw Error(Errc::shape_mismatch, "linear: input has " + std::to_string(v.size()) +
                                          " features, layer expects " +
                                          std::to_string(layer.in_features));
  }
  std::vector<float> out(layer.out_features);
  for (std::size_t o = 0; o < layer.out_features; ++o) {
    double s = layer.bias.empty() ? 0.0 : layer.bias[o];
    const float* wr = layer.weight.data() + o * layer.in_features;
    for (std::size_t i = 0; i < layer.in_features; ++i) s += static_cast<double>(wr[i]) * v[i];
    out[o] = static_cast<float>(s);
  }
  return out;
}

FrameTensor linear(const FrameTensor& x, const Linear& layer) {
  layer.validate();
  if (x.channels() != layer.in_features) {
    throw Error(Errc::shape_mismatch, "linear: input has " + std::to_string(x.channels()) +
                                          " channels, layer expects " +
                                          std::to_string(layer.in_features));
  }
  FrameTensor y(x.frames(), layer.out_features);
  for (std::size_t t = 0; t < x.frames(); ++t) {
    const auto out = linear(x.frame(t), layer);
    std::copy(out.begin(), out.end(), y.frame(t).begin());
  }
  return y;
}

FrameTensor add(const FrameTensor& a, const FrameTensor& b) {
  if (a.frames() != b.frames() || a.channels() != b.channels()) {
    throw Error(Errc::shape_mismatch, "add: shapes differ");
  }
  FrameTensor y = a;
  auto yd = y.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += bd[i];
  return y;
}

FrameTensor subtract(const FrameTensor& a, const FrameTensor& b) {
  if (a.frames() != b.frames() || a.channels() != b.channels()) {
    throw Error(Errc::shape_mismatch, "subtract: shapes differ");
  }
  FrameTensor y = a;
  auto yd = y.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] -= bd[i];
  return y;
}

namespace {

struct Projected {
  FrameTensor q, k, v;
};

Projected project_qkv(const FrameTensor& x, const AttentionParams& p, std::size_t window) {
  if (window == 0) throw Error(Errc::invalid_argument, "attention: window must be >= 1");
  if (p.query.in_features != x.channels() || p.key.in_features != x.channels() ||
      p.value.in_features != x.channels()) {
    throw Error(Errc::shape_mismatch, "attention: projection input dims do not match channels");
  }
  if (p.query.out_features != p.key.out_features) {
    throw Error(Errc::shape_mismatch, "attention: query and key dims differ");
  }
  return {linear(x, p.query), linear(x, p.key), linear(x, p.value)};
}

// Softmax weights of row t over [lo, hi], written to `w` (length hi - lo + 1).
void row_weights(const Projected& pr, std::size_t t, std::size_t lo, std::size_t hi,
                 std::vector<double>& w) {
  const std::size_t dk = pr.q.channels();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const float* qr = pr.q.frame(t).data();
  w.resize(hi - lo + 1);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t s = lo; s <= hi; ++s) {
    const float* kr = pr.k.frame(s).data();
    double dot = 0.0;
    for (std::size_t c = 0; c < dk; ++c) dot += static_cast<double>(qr[c]) * kr[c];
    w[s - lo] = dot * scale;
    mx = std::max(mx, w[s - lo]);
  }
  double total = 0.0;
  for (double& e : w) {
    e = std::exp(e - mx);
    total += e;
  }
  for (double& e : w) e /= total;
}

std::pair<std::size_t, std::size_t> window_bounds(std::size_t t, std::size_t T, std::size_t window) {
  const std::size_t reach = window - 1;
  const std::size_t lo = t >= reach ? t - reach : 0;
  const std::size_t hi = std::min(T - 1, t + reach);
  return {lo, hi};
}

}  // namespace

std::vector<double> attention_weights(const FrameTensor& x, const AttentionParams& params,
                                      std::size_t window) {
  const Projected pr = project_qkv(x, params, window);
  const std::size_t T = x.frames();
  std::vector<double> out(T * T, 0.0);
  std::vector<double> w;
  for (std::size_t t = 0; t < T; ++t) {
    const auto [lo, hi] = window_bounds(t, T, window);
    row_weights(pr, t, lo, hi, w);
    std::copy(w.begin(), w.end(), out.begin() + static_cast<std::ptrdiff_t>(t * T + lo));
  }
  return out;
}

FrameTensor local_windowed_attention(const FrameTensor& x, const AttentionParams& params,
                                     std::size_t window) {
  const Projected pr = project_qkv(x, params, window);
  const std::size_t T = x.frames();
  const std::size_t dv = pr.v.channels();
  FrameTensor mixed(T, dv);
  std::vector<double> w;
  std::vector<double> acc(dv);
  for (std::size_t t = 0; t < T; ++t) {
    const auto [lo, hi] = window_bounds(t, T, window);
    row_weights(pr, t, lo, hi, w);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t s = lo; s <= hi; ++s) {
      const float* vr = pr.v.frame(s).data();
      const double ws = w[s - lo];
      for (std::size_t c = 0; c < dv; ++c) acc[c] += ws * vr[c];
    }
    float* mr = mixed.frame(t).data();
    for (std::size_t c = 0; c < dv; ++c) mr[c] = static_cast<float>(acc[c]);
  }
  return linear(mixed, params.output);
}

}  // namespace mscodec
