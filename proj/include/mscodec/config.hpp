#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mscodec {

enum class Activation { snake, leaky_relu };

struct CodecConfig {
  std::string name = "custom";
  std::uint32_t sample_rate = 44100;
  std::vector<std::size_t> encoder_rates;
  std::vector<std::size_t> decoder_rates;
  std::vector<std::size_t> vq_strides;
  std::size_t codebook_size = 4096;
  std::size_t codeword_dim = 8;
  std::size_t base_channels = 32;
  std::size_t channel_growth = 2;
  bool attention_enabled = true;
  std::size_t attention_window = 32;
  bool noise_enabled = true;
  bool noise_per_element = false;
  bool depthwise = true;
  Activation activation = Activation::snake;
  bool share_projections = false;
  bool normalize_codes = false;

  /// Audio samples per latent frame.
  std::size_t hop() const;
  std::size_t stride_lcm() const;
  /// Encoder output width: base_channels * growth^stages.
  std::size_t latent_dim() const;
  std::size_t levels() const { return vq_strides.size(); }
  /// ceil(log2 K), at least 1.
  unsigned bits_per_token() const;

  /// Throws Errc::invalid_argument when the config cannot describe a codec.
  void validate() const;

  /// Key-sorted compact JSON; identical configs give identical text.
  std::string canonical_json() const;
  static CodecConfig from_json(std::string_view text);
  /// 64-bit FNV-1a of canonical_json().
  std::uint64_t hash() const;

  friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

/// Named configurations. general-44k, general-32k, speech-24k and
/// ablation-single-scale carry the published rates and strides at desk-scale
/// channel widths; toy is a tiny configuration for fast tests.
CodecConfig preset(std::string_view name);
const std::vector<std::string>& preset_names();
/// 1-based id of the preset `config` equals, 0 for anything else.
std::uint8_t preset_id(const CodecConfig& config);
std::string preset_name(std::uint8_t id);

/// Tokens per second emitted by each quantizer level.
std::vector<double> token_rates(const CodecConfig& config);

}  // namespace mscodec
