#include "mscodec/config.hpp"

#include <algorithm>
#include <functional>
#include <json.hpp>
#include <numeric>

#include "mscodec/error.hpp"

namespace mscodec {

namespace {

std::size_t product(const std::vector<std::size_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{1}, std::multiplies<>());
}

const char* activation_name(Activation a) { return a == Activation::snake ? "snake" : "leaky_relu"; }

}  // namespace

std::size_t CodecConfig::hop() const { return product(encoder_rates); }

std::size_t CodecConfig::stride_lcm() const {
  std::size_t l = 1;
  for (std::size_t s : vq_strides) l = std::lcm(l, s);
  return l;
}

std::size_t CodecConfig::latent_dim() const {
  std::size_t c = base_channels;
  for (std::size_t i = 0; i < encoder_rates.size(); ++i) c *= channel_growth;
  return c;
}

unsigned CodecConfig::bits_per_token() const {
  unsigned b = 1;
  while ((std::size_t{1} << b) < codebook_size) ++b;
  return b;
}

void CodecConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::invalid_argument, "config: " + msg); };
  if (sample_rate == 0) fail("sample_rate must be positive");
  if (encoder_rates.empty()) fail("encoder_rates must not be empty");
  if (encoder_rates.size() != decoder_rates.size()) fail("encoder and decoder need the same stage count");
  if (vq_strides.empty()) fail("vq_strides must not be empty");
  if (vq_strides.size() > 255) fail("at most 255 quantizer levels");
  for (auto r : encoder_rates) if (r == 0) fail("encoder rates must be >= 1");
  for (auto r : decoder_rates) if (r == 0) fail("decoder rates must be >= 1");
  for (auto s : vq_strides) if (s == 0) fail("vq strides must be >= 1");
  if (product(encoder_rates) != product(decoder_rates)) {
    fail("product(encoder_rates) must equal product(decoder_rates)");
  }
  if (codebook_size == 0 || codebook_size > (std::size_t{1} << 31)) fail("codebook_size out of range");
  if (codeword_dim == 0) fail("codeword_dim must be >= 1");
  if (base_channels == 0 || channel_growth == 0) fail("channel widths must be >= 1");
  if (attention_enabled && attention_window == 0) fail("attention_window must be >= 1");
  // Decoder widths halve (divide by growth) per stage starting from the latent width.
  std::size_t c = latent_dim();
  for (std::size_t i = 0; i < decoder_rates.size(); ++i) {
    if (c % channel_growth != 0 || c / channel_growth == 0) fail("decoder channel widths do not divide evenly");
    c /= channel_growth;
  }
}

std::string CodecConfig::canonical_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["sample_rate"] = sample_rate;
  j["encoder_rates"] = encoder_rates;
  j["decoder_rates"] = decoder_rates;
  j["vq_strides"] = vq_strides;
  j["codebook_size"] = codebook_size;
  j["codeword_dim"] = codeword_dim;
  j["base_channels"] = base_channels;
  j["channel_growth"] = channel_growth;
  j["attention_enabled"] = attention_enabled;
  j["attention_window"] = attention_window;
  j["noise_enabled"] = noise_enabled;
  j["noise_per_element"] = noise_per_element;
  j["depthwise"] = depthwise;
  j["activation"] = activation_name(activation);
  j["share_projections"] = share_projections;
  j["normalize_codes"] = normalize_codes;
  return j.dump();
}

CodecConfig CodecConfig::from_json(std::string_view text) {
  CodecConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.name = j.at("name").get<std::string>();
    c.sample_rate = j.at("sample_rate").get<std::uint32_t>();
    c.encoder_rates = j.at("encoder_rates").get<std::vector<std::size_t>>();
    c.decoder_rates = j.at("decoder_rates").get<std::vector<std::size_t>>();
    c.vq_strides = j.at("vq_strides").get<std::vector<std::size_t>>();
    c.codebook_size = j.at("codebook_size").get<std::size_t>();
    c.codeword_dim = j.at("codeword_dim").get<std::size_t>();
    c.base_channels = j.at("base_channels").get<std::size_t>();
    c.channel_growth = j.at("channel_growth").get<std::size_t>();
    c.attention_enabled = j.at("attention_enabled").get<bool>();
    c.attention_window = j.at("attention_window").get<std::size_t>();
    c.noise_enabled = j.at("noise_enabled").get<bool>();
    c.noise_per_element = j.at("noise_per_element").get<bool>();
    c.depthwise = j.at("depthwise").get<bool>();
    const auto act = j.at("activation").get<std::string>();
    if (act == "snake") {
      c.activation = Activation::snake;
    } else if (act == "leaky_relu") {
      c.activation = Activation::leaky_relu;
    } else {
      throw Error(Errc::invalid_argument, "config: unknown activation '" + act + "'");
    }
    c.share_projections = j.at("share_projections").get<bool>();
    c.normalize_codes = j.at("normalize_codes").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("config: malformed JSON: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t CodecConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"general-44k", "general-32k", "speech-24k",
                                                 "ablation-single-scale", "toy"};
  return names;
}

CodecConfig preset(std::string_view name) {
  CodecConfig c;
  c.name = std::string(name);
  c.codebook_size = 4096;
  c.codeword_dim = 8;
  c.base_channels = 32;
  c.channel_growth = 2;
  c.attention_window = 32;
  if (name == "general-44k" || name == "general-32k") {
    c.sample_rate = name == "general-44k" ? 44100 : 32000;
    c.encoder_rates = {2, 3, 8, 8};
    c.decoder_rates = {8, 8, 3, 2};
    c.vq_strides = {8, 4, 2, 1};
    c.attention_enabled = true;
  } else if (name == "speech-24k") {
    c.sample_rate = 24000;
    c.encoder_rates = {2, 4, 8, 8};
    c.decoder_rates = {8, 8, 4, 2};
    c.vq_strides = {4, 2, 1};
    c.attention_enabled = false;
  } else if (name == "ablation-single-scale") {
    c.sample_rate = 44100;
    c.encoder_rates = {2, 4, 8, 8};
    c.decoder_rates = {8, 8, 4, 2};
    c.vq_strides = {1, 1, 1};
    c.attention_enabled = true;
  } else if (name == "toy") {
    c.sample_rate = 8000;
    c.encoder_rates = {2, 2};
    c.decoder_rates = {2, 2};
    c.vq_strides = {2, 1};
    c.codebook_size = 16;
    c.codeword_dim = 4;
    c.base_channels = 4;
    c.attention_enabled = true;
    c.attention_window = 4;
  } else {
    throw Error(Errc::invalid_argument, "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::uint8_t preset_id(const CodecConfig& config) {
  const auto& names = preset_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (config.name == names[i] && preset(names[i]) == config) return static_cast<std::uint8_t>(i + 1);
  }
  return 0;
}

std::string preset_name(std::uint8_t id) {
  const auto& names = preset_names();
  if (id == 0 || id > names.size()) return "custom";
  return names[id - 1];
}

std::vector<double> token_rates(const CodecConfig& config) {
  std::vector<double> rates;
  for (std::size_t s : config.vq_strides) {
    rates.push_back(static_cast<double>(config.sample_rate) /
                    static_cast<double>(config.hop() * s));
  }
  return rates;
}

}  // namespace mscodec
