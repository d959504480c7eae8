// mscodec: encode, decode, inspect, score and train multi-scale RVQ codecs.
//
// Machine-readable results go to stdout as key=value lines; progress and
// human-oriented summaries go to stderr. Exit codes: 0 success, 1 internal
// error, 2 user error (bad input, bad flags, mismatched files).

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mscodec/bitstream.hpp"
#include "mscodec/codebook_training.hpp"
#include "mscodec/codec.hpp"
#include "mscodec/features.hpp"
#include "mscodec/metrics.hpp"
#include "mscodec/wav.hpp"
#include "mscodec/weights.hpp"

namespace {

using namespace mscodec;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class Seq>
std::string join(const Seq& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      out += num(v);
    } else {
      out += std::to_string(v);
    }
  }
  return out;
}

void kv(const std::string& key, const std::string& value) { std::cout << key << '=' << value << '\n'; }

Codec load_or_build(const std::string& preset_name, const std::string& weights, std::uint64_t seed) {
  if (!weights.empty()) return load_weights(weights);
  if (preset_name.empty()) throw UsageError("one of --preset or --weights is required");
  return Codec::build(preset(preset_name), seed);
}

int cmd_encode(const std::string& input, const std::string& output, const std::string& preset_name,
               const std::string& weights, std::uint64_t seed) {
  const Codec codec = load_or_build(preset_name, weights, seed);
  const AudioBuffer audio = read_wav(input);
  const FrameTensor latent = codec.encode_latent(audio);
  const MultiScaleCodes codes = quantize(latent, codec.quantizer()).codes;
  const BitstreamHeader header = make_header(codec.config(), audio.samples.size(), latent.frames());
  const auto bytes = pack(codes, header);
  write_file(output, bytes);

  std::vector<std::size_t> lengths;
  for (const auto& l : codes.levels) lengths.push_back(l.size());
  const double bps = exact_bitrate(codec.config()).bps();
  kv("preset", codec.config().name);
  kv("samples", std::to_string(audio.samples.size()));
  kv("latent_frames", std::to_string(latent.frames()));
  kv("level_lengths", join(lengths));
  kv("bitrate_bps", num(bps));
  kv("bytes", std::to_string(bytes.size()));
  std::cerr << "encoded " << audio.samples.size() << " samples into " << codes.total_tokens()
            << " tokens (" << format_bitrate(bps) << ")\n";
  return 0;
}

int cmd_decode(const std::string& input, const std::string& output, const std::string& weights,
               std::uint64_t seed, const std::string& noise) {
  const UnpackedStream stream = unpack(read_file(input));
  const BitstreamHeader& h = stream.header;

  NoiseMode mode = NoiseMode::off();
  if (noise != "off") {
    std::uint64_t noise_seed = 0;
    const auto res = std::from_chars(noise.data(), noise.data() + noise.size(), noise_seed);
    if (res.ec != std::errc() || res.ptr != noise.data() + noise.size()) {
      throw UsageError("--noise expects 'off' or an unsigned integer seed");
    }
    mode = NoiseMode::seeded(noise_seed);
  }

  std::optional<Codec> codec;
  if (!weights.empty()) {
    codec = load_weights(weights);
  } else if (h.preset_id != 0) {
    codec = Codec::build(preset(preset_name(h.preset_id)), seed);
  } else {
    throw UsageError("stream was produced by a custom config; pass --weights");
  }
  if (codec->config().hash() != h.config_hash) {
    throw Error(Errc::config_mismatch, "weights config does not match the stream's config hash");
  }

  AudioBuffer audio = codec->decode(stream.codes, mode);
  if (h.original_sample_count > audio.samples.size()) {
    throw Error(Errc::corrupt, "stream claims more original samples than it encodes");
  }
  audio.samples.resize(h.original_sample_count);
  write_wav(output, audio);
  kv("samples", std::to_string(audio.samples.size()));
  kv("sample_rate", std::to_string(audio.sample_rate));
  std::cerr << "decoded " << audio.samples.size() << " samples at " << audio.sample_rate << " Hz\n";
  return 0;
}

int cmd_inspect(const std::string& input) {
  // Fully parse before printing anything so a corrupt file prints nothing.
  const UnpackedStream stream = unpack(read_file(input));
  const BitstreamHeader& h = stream.header;
  const double bps = exact_bitrate(h).bps();
  std::vector<double> rates;
  std::vector<long> rounded;
  for (auto s : h.strides) {
    const double r = static_cast<double>(h.sample_rate) / (static_cast<double>(h.hop) * s);
    rates.push_back(r);
    rounded.push_back(std::lround(r));
  }

  std::ostringstream hash;
  hash << std::hex << h.config_hash;
  kv("format_version", std::to_string(kBitstreamVersion));
  kv("preset", preset_name(h.preset_id));
  kv("config_hash", hash.str());
  kv("sample_rate", std::to_string(h.sample_rate));
  kv("hop", std::to_string(h.hop));
  kv("original_samples", std::to_string(h.original_sample_count));
  kv("latent_frames", std::to_string(h.latent_frames));
  kv("levels", std::to_string(h.strides.size()));
  kv("strides", join(h.strides));
  kv("level_lengths", join(h.level_lengths()));
  kv("bits_per_token", std::to_string(h.bits_per_token));
  kv("token_rates_hz", join(rates));
  kv("token_rates_rounded_hz", join(rounded));
  kv("bitrate_bps", num(bps));
  kv("bitrate_kbps", num(bps / 1000.0));
  kv("payload_bits", std::to_string(h.payload_bits()));
  std::cerr << "bitrate: " << num(bps) << " bps (" << format_bitrate(bps) << "), token rates "
            << join(rounded) << " Hz\n";
  return 0;
}

// Scales to unit peak; silent input is left alone.
AudioBuffer peak_normalized(AudioBuffer a) {
  float peak = 0.0f;
  for (float s : a.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0f)
    for (float& s : a.samples) s /= peak;
  return a;
}

int cmd_metrics(const std::string& ref_path, const std::string& est_path, const std::string& set,
                bool normalize) {
  AudioBuffer ref = read_wav(ref_path);
  AudioBuffer est = read_wav(est_path);
  if (normalize) {
    ref = peak_normalized(std::move(ref));
    est = peak_normalized(std::move(est));
  }
  std::vector<std::string> which;
  std::stringstream ss(set);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item != "sisdr" && item != "mel" && item != "stft") {
      throw UsageError("unknown metric '" + item + "' (expected sisdr, mel, stft)");
    }
    which.push_back(item);
  }
  for (const auto& m : which) {
    if (m == "sisdr") kv("sisdr", num(si_sdr(ref, est)));
    if (m == "mel") kv("mel", num(mel_l1(ref, est)));
    if (m == "stft") kv("stft", num(stft_l1(ref, est)));
  }
  return 0;
}

struct TrainArgs {
  std::string features;
  std::string preset_name;
  std::string output;
  std::size_t iterations = 50;
  std::uint64_t seed = 0;
  std::optional<std::size_t> codebook_size;
  std::optional<std::size_t> codeword_dim;
  std::vector<std::size_t> strides;
  double ema_decay = 0.99;
  double dead_threshold = 2.0;
};

int cmd_train(const TrainArgs& a) {
  CodecConfig config = preset(a.preset_name);
  if (a.codebook_size) config.codebook_size = *a.codebook_size;
  if (a.codeword_dim) config.codeword_dim = *a.codeword_dim;
  if (!a.strides.empty()) config.vq_strides = a.strides;
  if (config != preset(a.preset_name)) config.name = "custom";
  config.validate();

  const FrameTensor features = read_features(a.features);
  if (features.channels() != config.latent_dim()) {
    throw Error(Errc::shape_mismatch, "features have " + std::to_string(features.channels()) +
                                          " channels, preset latent dim is " +
                                          std::to_string(config.latent_dim()));
  }
  std::vector<LevelConfig> levels;
  for (auto s : config.vq_strides) levels.push_back({s, config.codebook_size, config.codeword_dim});
  TrainingOptions opts;
  opts.iterations = a.iterations;
  opts.ema_decay = a.ema_decay;
  opts.dead_code_threshold = a.dead_threshold;
  opts.rng_seed = a.seed;
  opts.normalize = config.normalize_codes;

  TrainingResult result = train_codebooks_ema(features, levels, opts);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

  Codec codec = Codec::build(config, a.seed);
  codec.set_quantizer(std::move(result.levels));
  save_weights(codec, a.output);

  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    const std::string p = "level" + std::to_string(i) + "_";
    kv(p + "mse", join(r.mse));
    kv(p + "final_mse", num(r.final_mse));
    kv(p + "residual_energy", num(r.residual_energy_after));
    kv(p + "entropy", num(r.usage_entropy));
    kv(p + "dead_code_resets", std::to_string(r.dead_code_resets));
    std::cerr << "level " << i << ": residual energy " << num(r.residual_energy_before) << " -> "
              << num(r.residual_energy_after) << ", usage entropy " << num(r.usage_entropy) << '\n';
  }
  kv("parameters", std::to_string(codec.count_parameters()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale residual vector quantization audio codec"};
  app.require_subcommand(1);

  std::string in, out, preset_name, weights, noise = "off", set = "sisdr,mel,stft";
  std::uint64_t seed = 0;

  auto* enc = app.add_subcommand("encode", "Encode a mono WAV into a token bitstream");
  enc->add_option("input", in, "Input WAV")->required();
  enc->add_option("output", out, "Output bitstream")->required();
  auto* enc_preset = enc->add_option("--preset", preset_name, "Preset name");
  enc->add_option("--weights", weights, "Weight file")->excludes(enc_preset);
  enc->add_option("--seed", seed, "Seed for random weights");

  auto* dec = app.add_subcommand("decode", "Decode a token bitstream into a WAV");
  dec->add_option("input", in, "Input bitstream")->required();
  dec->add_option("output", out, "Output WAV")->required();
  dec->add_option("--weights", weights, "Weight file (default: random weights of the stream's preset)");
  dec->add_option("--seed", seed, "Seed for random weights");
  dec->add_option("--noise", noise, "'off' or a noise seed");

  auto* ins = app.add_subcommand("inspect", "Print bitstream header and bitrate accounting");
  ins->add_option("input", in, "Bitstream")->required();

  std::string est;
  auto* met = app.add_subcommand("metrics", "Compare two WAV files");
  met->add_option("reference", in, "Reference WAV")->required();
  met->add_option("estimate", est, "Estimate WAV")->required();
  met->add_option("--set", set, "Comma-separated subset of sisdr,mel,stft");
  bool peak_normalize = false;
  met->add_flag("--peak-normalize", peak_normalize, "Scale both signals to unit peak first");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train-codebooks", "Fit codebooks to latent features with EMA k-means");
  tr->add_option("features", ta.features, "Feature file")->required();
  tr->add_option("--preset", ta.preset_name, "Preset name")->required();
  tr->add_option("--output", ta.output, "Output weight file")->required();
  tr->add_option("--iters", ta.iterations, "EMA iterations per level");
  tr->add_option("--seed", ta.seed, "RNG seed");
  tr->add_option("--codebook-size", ta.codebook_size, "Override codebook size");
  tr->add_option("--codeword-dim", ta.codeword_dim, "Override codeword dimension");
  tr->add_option("--strides", ta.strides, "Override quantizer strides")->delimiter(',');
  tr->add_option("--ema-decay", ta.ema_decay, "EMA decay");
  tr->add_option("--dead-threshold", ta.dead_threshold, "Dead-code threshold (assignments per pass)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*enc) return cmd_encode(in, out, preset_name, weights, seed);
    if (*dec) return cmd_decode(in, out, weights, seed, noise);
    if (*ins) return cmd_inspect(in);
    if (*met) return cmd_metrics(in, est, set, peak_normalize);
    if (*tr) return cmd_train(ta);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
