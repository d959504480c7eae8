#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mscodec/config.hpp"
#include "mscodec/frame_tensor.hpp"
#include "mscodec/kernels.hpp"
#include "mscodec/msrvq.hpp"

namespace mscodec {

struct AudioBuffer {
  std::uint32_t sample_rate = 0;
  std::vector<float> samples;  // mono
};

struct NoiseBlockParams {
  Linear scale_proj;  // C -> C, no bias
};

/// Noise source for the decoder's noise blocks.
struct NoiseMode {
  bool enabled = false;
  std::uint64_t seed = 0;

  static NoiseMode off() { return {}; }
  static NoiseMode seeded(std::uint64_t seed) { return {true, seed}; }
};

/// x + scale_proj(x) * eps. `eps` is T x 1 (one draw per frame, broadcast
/// across channels) or T x C (one draw per element).
FrameTensor noise_block(const FrameTensor& x, const NoiseBlockParams& params, const FrameTensor& eps);

/// Scalar weights in one conv layer, bias included.
std::size_t count_parameters(const ConvSpec& conv);

enum class ConvRole {
  embedding,      // audio -> first encoder width
  residual,       // dilated conv inside a residual unit
  pointwise,      // 1x1 mixing conv (residual units, decoder input)
  downsample,     // strided encoder conv
  latent,         // last encoder conv
  decoder_input,  // first decoder conv
  upsample,       // transposed decoder conv
  output,         // last decoder conv -> audio
};

const char* conv_role_name(ConvRole role);

struct ConvInfo {
  std::string name;
  ConvRole role;
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel_size;
  std::size_t stride;
  std::size_t groups;
  bool depthwise;
  bool transposed;
};

/// Shape of one named parameter tensor, as stored in weight files.
using TensorShape = std::vector<std::size_t>;

/// Encoder -> multi-scale RVQ -> decoder. Immutable once built; encode and
/// decode may run concurrently.
class Codec {
 public:
  /// Random initialization, bit-identical for a given seed.
  static Codec build(const CodecConfig& config, std::uint64_t seed);
  /// All parameters zero (Snake alphas one); used as a target for loading.
  static Codec zeros(const CodecConfig& config);

  const CodecConfig& config() const { return config_; }

  /// Samples after right-padding `samples` to a multiple of hop * lcm(strides).
  std::size_t padded_length(std::size_t samples) const;

  FrameTensor encode_latent(const AudioBuffer& audio) const;
  MultiScaleCodes encode(const AudioBuffer& audio) const;

  AudioBuffer decode_latent(const FrameTensor& latent, NoiseMode noise) const;
  AudioBuffer decode(const MultiScaleCodes& codes, NoiseMode noise) const;

  std::span<const QuantizerLevel> quantizer() const { return quantizer_; }
  /// Replaces codebooks and projections, e.g. after train_codebooks_ema.
  void set_quantizer(std::vector<QuantizerLevel> levels);

  /// Exact number of scalar parameters, codebooks and projections included.
  std::size_t count_parameters() const;

  std::vector<ConvInfo> conv_layers() const;

  /// Visits every stored tensor in a fixed order. The callback may modify
  /// the data but not resize it.
  void for_each_parameter(
      const std::function<void(const std::string&, const TensorShape&, std::span<float>)>& fn);
  void for_each_parameter(
      const std::function<void(const std::string&, const TensorShape&, std::span<const float>)>& fn) const;

  /// Re-applies invariants after bulk parameter edits (shared projections).
  void finalize();

 private:
  struct ResidualUnit {
    std::vector<float> alpha1;
    ConvSpec conv;
    std::vector<float> alpha2;
    ConvSpec pointwise;
  };
  struct EncoderStage {
    ResidualUnit units[3];
    std::vector<float> alpha;
    ConvSpec down;
  };
  struct DecoderStage {
    std::vector<float> alpha;
    ConvSpec up;
    NoiseBlockParams noise;
    ResidualUnit units[3];
  };

  explicit Codec(const CodecConfig& config);

  FrameTensor activate(const FrameTensor& x, const std::vector<float>& alpha) const;
  FrameTensor residual_unit(const FrameTensor& x, const ResidualUnit& unit) const;

  template <class Self, class F>
  static void visit(Self& self, F&& fn);

  CodecConfig config_;
  ConvSpec embed_;
  std::vector<EncoderStage> encoder_;
  AttentionParams encoder_attention_;
  ConvSpec latent_;
  std::vector<QuantizerLevel> quantizer_;
  std::vector<ConvSpec> decoder_input_;
  AttentionParams decoder_attention_;
  std::vector<DecoderStage> decoder_;
  std::vector<float> output_alpha_;
  ConvSpec output_;
};

}  // namespace mscodec
