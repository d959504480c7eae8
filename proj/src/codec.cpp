#include "mscodec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mscodec {

namespace {

ConvSpec make_conv(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                   std::size_t dilation, std::size_t groups, std::size_t pad_left,
                   std::size_t pad_right) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel_size = kernel;
  s.stride = stride;
  s.dilation = dilation;
  s.groups = groups;
  s.pad_left = pad_left;
  s.pad_right = pad_right;
  s.weights.assign(s.weight_count(), 0.0f);
  s.bias.assign(out, 0.0f);
  return s;
}

AttentionParams make_attention(std::size_t dim) {
  return {Linear::zeros(dim, dim, false), Linear::zeros(dim, dim, false),
          Linear::zeros(dim, dim, false), Linear::zeros(dim, dim, false)};
}

constexpr std::size_t kResidualKernel = 7;
constexpr std::size_t kDilations[3] = {1, 3, 9};

}  // namespace

const char* conv_role_name(ConvRole role) {
  switch (role) {
    case ConvRole::embedding: return "embedding";
    case ConvRole::residual: return "residual";
    case ConvRole::pointwise: return "pointwise";
    case ConvRole::downsample: return "downsample";
    case ConvRole::latent: return "latent";
    case ConvRole::decoder_input: return "decoder_input";
    case ConvRole::upsample: return "upsample";
    case ConvRole::output: return "output";
  }
  return "unknown";
}

FrameTensor noise_block(const FrameTensor& x, const NoiseBlockParams& params, const FrameTensor& eps) {
  const std::size_t C = x.channels();
  if (params.scale_proj.in_features != C || params.scale_proj.out_features != C) {
    throw Error(Errc::shape_mismatch, "noise_block: scale_proj must map C -> C");
  }
  if (eps.frames() != x.frames() || (eps.channels() != 1 && eps.channels() != C)) {
    throw Error(Errc::shape_mismatch, "noise_block: eps must be T x 1 or T x C");
  }
  const FrameTensor h = linear(x, params.scale_proj);
  FrameTensor y = x;
  const bool broadcast = eps.channels() == 1;
  for (std::size_t t = 0; t < x.frames(); ++t) {
    float* yr = y.frame(t).data();
    const float* hr = h.frame(t).data();
    const float* er = eps.frame(t).data();
    for (std::size_t c = 0; c < C; ++c) yr[c] += hr[c] * er[broadcast ? 0 : c];
  }
  return y;
}

Codec::Codec(const CodecConfig& config) : config_(config) {
  config_.validate();
  const bool snake = config_.activation == Activation::snake;
  auto alpha = [snake](std::size_t c) { return snake ? std::vector<float>(c, 1.0f) : std::vector<float>{}; };
  auto unit = [&](std::size_t dim, std::size_t dilation) {
    const std::size_t groups = config_.depthwise ? dim : 1;
    const std::size_t pad = (kResidualKernel - 1) * dilation / 2;
    return ResidualUnit{alpha(dim), make_conv(dim, dim, kResidualKernel, 1, dilation, groups, pad, pad),
                        alpha(dim), make_conv(dim, dim, 1, 1, 1, 1, 0, 0)};
  };

  std::size_t dim = config_.base_channels;
  embed_ = make_conv(1, dim, 7, 1, 1, 1, 3, 3);
  for (std::size_t rate : config_.encoder_rates) {
    EncoderStage st;
    for (std::size_t j = 0; j < 3; ++j) st.units[j] = unit(dim, kDilations[j]);
    st.alpha = alpha(dim);
    st.down = make_conv(dim, dim * config_.channel_growth, 2 * rate, rate, 1, 1, (rate + 1) / 2, rate / 2);
    encoder_.push_back(std::move(st));
    dim *= config_.channel_growth;
  }
  if (config_.attention_enabled) encoder_attention_ = make_attention(dim);
  latent_ = make_conv(dim, dim, 7, 1, 1, config_.depthwise ? dim : 1, 3, 3);

  for (std::size_t stride : config_.vq_strides) {
    QuantizerLevel lv;
    lv.config = {stride, config_.codebook_size, config_.codeword_dim};
    lv.codebook.entries = FrameTensor(config_.codebook_size, config_.codeword_dim);
    lv.codebook.in_proj = Linear::zeros(dim, config_.codeword_dim, true);
    lv.codebook.out_proj = Linear::zeros(config_.codeword_dim, dim, true);
    lv.codebook.normalize = config_.normalize_codes;
    quantizer_.push_back(std::move(lv));
  }

  if (config_.depthwise) {
    decoder_input_.push_back(make_conv(dim, dim, 7, 1, 1, dim, 3, 3));
    decoder_input_.push_back(make_conv(dim, dim, 1, 1, 1, 1, 0, 0));
  } else {
    decoder_input_.push_back(make_conv(dim, dim, 7, 1, 1, 1, 3, 3));
  }
  if (config_.attention_enabled) decoder_attention_ = make_attention(dim);
  for (std::size_t rate : config_.decoder_rates) {
    const std::size_t out = dim / config_.channel_growth;
    DecoderStage st;
    st.alpha = alpha(dim);
    st.up = make_conv(dim, out, 2 * rate, rate, 1, 1, (rate + 1) / 2, rate / 2);
    if (config_.noise_enabled) st.noise.scale_proj = Linear::zeros(out, out, false);
    for (std::size_t j = 0; j < 3; ++j) st.units[j] = unit(out, kDilations[j]);
    decoder_.push_back(std::move(st));
    dim = out;
  }
  output_alpha_ = alpha(dim);
  output_ = make_conv(dim, 1, 7, 1, 1, 1, 3, 3);
}

Codec Codec::zeros(const CodecConfig& config) { return Codec(config); }

Codec Codec::build(const CodecConfig& config, std::uint64_t seed) {
  Codec codec(config);
  std::mt19937_64 rng(seed);
  codec.for_each_parameter([&](const std::string& name, const TensorShape& shape, std::span<float> data) {
    if (name.ends_with(".bias")) return;
    if (name.find("alpha") != std::string::npos) return;
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& v : data) v = static_cast<float>(dist(rng));
  });
  codec.finalize();
  return codec;
}

template <class Self, class F>
void Codec::visit(Self& self, F&& fn) {
  auto vec = [&](const std::string& name, auto& v) {
    if (!v.empty()) fn(name, TensorShape{v.size()}, std::span(v));
  };
  auto conv = [&](const std::string& name, auto& spec) {
    fn(name + ".weight", TensorShape{spec.out_channels, spec.in_per_group(), spec.kernel_size},
       std::span(spec.weights));
    vec(name + ".bias", spec.bias);
  };
  auto lin = [&](const std::string& name, auto& l) {
    fn(name + ".weight", TensorShape{l.out_features, l.in_features}, std::span(l.weight));
    vec(name + ".bias", l.bias);
  };
  auto unit = [&](const std::string& name, auto& u) {
    vec(name + ".alpha1", u.alpha1);
    conv(name + ".conv", u.conv);
    vec(name + ".alpha2", u.alpha2);
    conv(name + ".pointwise", u.pointwise);
  };
  auto attention = [&](const std::string& name, auto& a) {
    lin(name + ".query", a.query);
    lin(name + ".key", a.key);
    lin(name + ".value", a.value);
    lin(name + ".output", a.output);
  };
  const CodecConfig& cfg = self.config_;

  conv("encoder.embed", self.embed_);
  for (std::size_t i = 0; i < self.encoder_.size(); ++i) {
    auto& st = self.encoder_[i];
    const std::string p = "encoder.stages." + std::to_string(i);
    for (std::size_t j = 0; j < 3; ++j) unit(p + ".units." + std::to_string(j), st.units[j]);
    vec(p + ".alpha", st.alpha);
    conv(p + ".down", st.down);
  }
  if (cfg.attention_enabled) attention("encoder.attention", self.encoder_attention_);
  conv("encoder.latent", self.latent_);

  for (std::size_t i = 0; i < self.quantizer_.size(); ++i) {
    auto& cb = self.quantizer_[i].codebook;
    const std::string p = "quantizer.levels." + std::to_string(i);
    fn(p + ".codebook", TensorShape{cb.entries.frames(), cb.entries.channels()}, cb.entries.data());
    if (!cfg.share_projections) {
      lin(p + ".in_proj", cb.in_proj);
      lin(p + ".out_proj", cb.out_proj);
    }
  }
  if (cfg.share_projections && !self.quantizer_.empty()) {
    lin("quantizer.shared.in_proj", self.quantizer_[0].codebook.in_proj);
    lin("quantizer.shared.out_proj", self.quantizer_[0].codebook.out_proj);
  }

  for (std::size_t i = 0; i < self.decoder_input_.size(); ++i) {
    conv("decoder.input." + std::to_string(i), self.decoder_input_[i]);
  }
  if (cfg.attention_enabled) attention("decoder.attention", self.decoder_attention_);
  for (std::size_t i = 0; i < self.decoder_.size(); ++i) {
    auto& st = self.decoder_[i];
    const std::string p = "decoder.stages." + std::to_string(i);
    vec(p + ".alpha", st.alpha);
    conv(p + ".up", st.up);
    if (cfg.noise_enabled) {
      fn(p + ".noise.scale_proj.weight",
         TensorShape{st.noise.scale_proj.out_features, st.noise.scale_proj.in_features},
         std::span(st.noise.scale_proj.weight));
    }
    for (std::size_t j = 0; j < 3; ++j) unit(p + ".units." + std::to_string(j), st.units[j]);
  }
  vec("decoder.output.alpha", self.output_alpha_);
  conv("decoder.output", self.output_);
}

void Codec::for_each_parameter(
    const std::function<void(const std::string&, const TensorShape&, std::span<float>)>& fn) {
  visit(*this, fn);
}

void Codec::for_each_parameter(
    const std::function<void(const std::string&, const TensorShape&, std::span<const float>)>& fn) const {
  visit(*this, fn);
}

void Codec::finalize() {
  if (!config_.share_projections) return;
  for (std::size_t i = 1; i < quantizer_.size(); ++i) {
    quantizer_[i].codebook.in_proj = quantizer_[0].codebook.in_proj;
    quantizer_[i].codebook.out_proj = quantizer_[0].codebook.out_proj;
  }
}

void Codec::set_quantizer(std::vector<QuantizerLevel> levels) {
  if (levels.size() != quantizer_.size()) {
    throw Error(Errc::shape_mismatch, "set_quantizer: expected " + std::to_string(quantizer_.size()) +
                                          " levels, got " + std::to_string(levels.size()));
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& have = quantizer_[i];
    auto& lv = levels[i];
    lv.codebook.validate();
    if (lv.config.stride != have.config.stride || lv.codebook.size() != have.codebook.size() ||
        lv.codebook.dim() != have.codebook.dim() ||
        lv.codebook.latent_dim() != have.codebook.latent_dim()) {
      throw Error(Errc::shape_mismatch, "set_quantizer: level " + std::to_string(i) +
                                            " does not match the codec configuration");
    }
    lv.codebook.normalize = config_.normalize_codes;
  }
  quantizer_ = std::move(levels);
  finalize();
}

std::size_t count_parameters(const ConvSpec& conv) { return conv.weight_count() + conv.bias.size(); }

std::size_t Codec::count_parameters() const {
  std::size_t n = 0;
  for_each_parameter([&](const std::string&, const TensorShape&, std::span<const float> data) {
    n += data.size();
  });
  return n;
}

std::vector<ConvInfo> Codec::conv_layers() const {
  std::vector<ConvInfo> out;
  auto add = [&](const std::string& name, ConvRole role, const ConvSpec& s, bool transposed) {
    out.push_back({name, role, s.in_channels, s.out_channels, s.kernel_size, s.stride, s.groups,
                   s.depthwise(), transposed});
  };
  auto unit = [&](const std::string& p, const ResidualUnit& u) {
    add(p + ".conv", ConvRole::residual, u.conv, false);
    add(p + ".pointwise", ConvRole::pointwise, u.pointwise, false);
  };
  add("encoder.embed", ConvRole::embedding, embed_, false);
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const std::string p = "encoder.stages." + std::to_string(i);
    for (std::size_t j = 0; j < 3; ++j) unit(p + ".units." + std::to_string(j), encoder_[i].units[j]);
    add(p + ".down", ConvRole::downsample, encoder_[i].down, false);
  }
  add("encoder.latent", ConvRole::latent, latent_, false);
  for (std::size_t i = 0; i < decoder_input_.size(); ++i) {
    const auto& s = decoder_input_[i];
    add("decoder.input." + std::to_string(i),
        s.kernel_size == 1 ? ConvRole::pointwise : ConvRole::decoder_input, s, false);
  }
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    const std::string p = "decoder.stages." + std::to_string(i);
    add(p + ".up", ConvRole::upsample, decoder_[i].up, true);
    for (std::size_t j = 0; j < 3; ++j) unit(p + ".units." + std::to_string(j), decoder_[i].units[j]);
  }
  add("decoder.output", ConvRole::output, output_, false);
  return out;
}

std::size_t Codec::padded_length(std::size_t samples) const {
  const std::size_t block = config_.hop() * config_.stride_lcm();
  return (samples + block - 1) / block * block;
}

FrameTensor Codec::activate(const FrameTensor& x, const std::vector<float>& alpha) const {
  if (config_.activation == Activation::snake) return snake(x, alpha);
  return leaky_relu(x);
}

FrameTensor Codec::residual_unit(const FrameTensor& x, const ResidualUnit& u) const {
  FrameTensor y = conv1d(activate(x, u.alpha1), u.conv);
  y = conv1d(activate(y, u.alpha2), u.pointwise);
  return add(x, y);
}

FrameTensor Codec::encode_latent(const AudioBuffer& audio) const {
  if (audio.sample_rate != config_.sample_rate) {
    throw Error(Errc::sample_rate_mismatch,
                "encode: expected " + std::to_string(config_.sample_rate) + " Hz, got " +
                    std::to_string(audio.sample_rate) + " Hz");
  }
  if (audio.samples.empty()) throw Error(Errc::empty_input, "encode: empty audio");
  for (float s : audio.samples) {
    if (!std::isfinite(s)) throw Error(Errc::invalid_argument, "encode: non-finite sample");
  }
  const std::size_t padded = padded_length(audio.samples.size());
  std::vector<float> samples(padded, 0.0f);
  std::copy(audio.samples.begin(), audio.samples.end(), samples.begin());

  FrameTensor h = conv1d(FrameTensor(padded, 1, std::move(samples)), embed_);
  for (const auto& st : encoder_) {
    for (const auto& u : st.units) h = residual_unit(h, u);
    h = conv1d(activate(h, st.alpha), st.down);
  }
  if (config_.attention_enabled) {
    h = add(h, local_windowed_attention(h, encoder_attention_, config_.attention_window));
  }
  h = conv1d(h, latent_);
  if (h.frames() * config_.hop() != padded) {
    throw Error(Errc::shape_mismatch, "encode: encoder produced " + std::to_string(h.frames()) +
                                          " frames for " + std::to_string(padded) + " samples");
  }
  return h;
}

MultiScaleCodes Codec::encode(const AudioBuffer& audio) const {
  return quantize(encode_latent(audio), quantizer_).codes;
}

AudioBuffer Codec::decode_latent(const FrameTensor& latent, NoiseMode noise) const {
  if (latent.channels() != config_.latent_dim()) {
    throw Error(Errc::shape_mismatch, "decode: latent has " + std::to_string(latent.channels()) +
                                          " channels, codec expects " +
                                          std::to_string(config_.latent_dim()));
  }
  if (latent.frames() == 0) throw Error(Errc::empty_input, "decode: no latent frames");
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);

  FrameTensor h = latent;
  for (const auto& conv : decoder_input_) h = conv1d(h, conv);
  if (config_.attention_enabled) {
    h = add(h, local_windowed_attention(h, decoder_attention_, config_.attention_window));
  }
  for (const auto& st : decoder_) {
    h = transposed_conv1d(activate(h, st.alpha), st.up);
    if (config_.noise_enabled && noise.enabled) {
      FrameTensor eps(h.frames(), config_.noise_per_element ? h.channels() : 1);
      for (float& e : eps.data()) e = normal(rng);
      h = noise_block(h, st.noise, eps);
    }
    for (const auto& u : st.units) h = residual_unit(h, u);
  }
  h = tanh(conv1d(activate(h, output_alpha_), output_));
  return {config_.sample_rate, h.values()};
}

AudioBuffer Codec::decode(const MultiScaleCodes& codes, NoiseMode noise) const {
  return decode_latent(dequantize(codes, quantizer_), noise);
}

}  // namespace mscodec
