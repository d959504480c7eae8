// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "mscodec/bitstream.hpp"
#include "mscodec/codebook_training.hpp"
#include "mscodec/codec.hpp"
#include "mscodec/config.hpp"
#include "mscodec/metrics.hpp"
#include "mscodec/wav.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mscodec;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) {
    if (pass) detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Errc error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::io;
}

const std::vector<std::string> kPaperPresets{"general-44k", "general-32k", "speech-24k", "ablation-single-scale"};

Outcome bitrate_accounting() {
  Outcome o;
  struct Row {
    std::string name;
    Bitrate exact;
    double bps;
    std::string shown;
  };
  // B * sr * sum(1/W_i) / hop, reduced by hand.
  const std::vector<Row> rows{{"general-44k", {165375, 64}, 2583.984375, "2.6 kbps"},
                              {"general-32k", {1875, 1}, 1875.0, "1.9 kbps"},
                              {"speech-24k", {7875, 8}, 984.375, "984 bps"},
                              {"ablation-single-scale", {198450, 64}, 3100.78125, "3.1 kbps"}};
  for (const auto& r : rows) {
    const auto cfg = preset(r.name);
    const Bitrate b = exact_bitrate(cfg);
    o.expect(b.numerator * r.exact.denominator == r.exact.numerator * b.denominator,
             r.name + " exact " + std::to_string(b.numerator) + "/" + std::to_string(b.denominator));
    o.expect(bitrate(cfg) == r.bps, r.name + " bps " + fmt(bitrate(cfg), 12));
    o.expect(format_bitrate(bitrate(cfg)) == r.shown, r.name + " shown as " + format_bitrate(bitrate(cfg)));
    o.note(r.name + " " + fmt(bitrate(cfg), 10) + " bps -> " + format_bitrate(bitrate(cfg)));
  }
  return o;
}

Outcome token_rate_accounting() {
  Outcome o;
  const std::vector<std::pair<std::string, std::vector<long>>> rows{
      {"general-44k", {14, 29, 57, 115}}, {"general-32k", {10, 21, 42, 83}}, {"speech-24k", {12, 23, 47}}};
  for (const auto& [name, expected] : rows) {
    std::vector<long> got;
    std::string shown;
    for (double hz : token_rates(preset(name))) {
      got.push_back(std::lround(hz));
      shown += (shown.empty() ? "" : ",") + std::to_string(got.back());
    }
    o.expect(got == expected, name + " rates " + shown);
    o.note(name + " {" + shown + "} Hz");
  }
  return o;
}

Outcome msrvq_correctness() {
  Outcome o;
  ts::Rng rng(1003);
  int matches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t C = ts::pick(rng, 1, 8);
    std::vector<QuantizerLevel> levels;
    for (std::size_t n = ts::pick(rng, 1, 4); n > 0; --n)
      levels.push_back(ts::random_level(rng, 1, ts::pick(rng, 1, 64), C, ts::pick(rng, 1, 8)));
    const auto z = ts::random_tensor(rng, ts::pick(rng, 1, 64), C);
    matches += quantize(z, levels).codes.levels == oracle::plain_rvq(z, levels);
  }
  o.expect(matches == 100, std::to_string(matches) + "/100 plain-RVQ matches");
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t C = ts::pick(rng, 1, 8);
    std::vector<QuantizerLevel> levels;
    for (std::size_t w : {8, 4, 2, 1}) levels.push_back(ts::random_level(rng, w, ts::pick(rng, 1, 64), C, ts::pick(rng, 1, 8)));
    const auto z = ts::random_tensor(rng, 8 * ts::pick(rng, 1, 16), C, 2.0f);
    const auto r = quantize(z, levels);
    worst = std::max(worst, oracle::max_abs_diff(add(r.z_hat, r.residual), z));
  }
  o.expect(worst <= 1e-5, "telescoping error " + fmt(worst));
  o.note("100/100 token-exact vs plain RVQ; max |z - z_hat - r| " + fmt(worst, 3));
  return o;
}

Outcome pool_upsample_algebra() {
  Outcome o;
  ts::Rng rng(1004);
  int failures = 0;
  for (std::size_t w : {1, 2, 4, 8}) {
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t C = ts::pick(rng, 1, 6);
      const auto x = ts::random_tensor(rng, ts::pick(rng, 1, 32), C, 10.0f);
      failures += !(avg_pool(nn_upsample(x, w), w) == x);
      const auto y = ts::random_tensor(rng, w * ts::pick(rng, 1, 32), C, 10.0f);
      const auto p = nn_upsample(avg_pool(y, w), w);
      failures += !(nn_upsample(avg_pool(p, w), w) == p);
    }
  }
  o.expect(failures == 0, std::to_string(failures) + " exact-equality failures");
  o.note("4 x 500 tensors, both identities exact");
  return o;
}

Outcome kernel_oracles() {
  Outcome o;
  ts::Rng rng(1005);
  double dw = 0.0, tr = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t C = ts::pick(rng, 1, 12);
    const auto spec = ts::random_depthwise(rng, C);
    const auto x = ts::random_tensor(rng, spec.dilation * (spec.kernel_size - 1) + ts::pick(rng, 1, 40), C);
    dw = std::max(dw, oracle::max_abs_diff(conv1d(x, spec), conv1d(x, oracle::block_diagonal(spec))));
    dw = std::max(dw, oracle::max_abs_diff(conv1d(x, spec), oracle::direct_conv(x, spec)));
  }
  for (int trial = 0; trial < 200; ++trial) {
    const auto spec = ts::random_transposed(rng);
    const auto x = ts::random_tensor(rng, ts::pick(rng, 2, 24), spec.in_channels);
    tr = std::max(tr, oracle::max_abs_diff(transposed_conv1d(x, spec), oracle::zero_stuffed_transposed_conv(x, spec)));
  }
  o.expect(dw <= 1e-6, "depthwise max error " + fmt(dw));
  o.expect(tr <= 1e-6, "transposed max error " + fmt(tr));
  o.note("depthwise max err " + fmt(dw, 3) + ", transposed max err " + fmt(tr, 3));
  return o;
}

Outcome codebook_learning() {
  Outcome o;
  const std::uint64_t seed = 6;
  ts::Rng rng(seed);
  const auto data = ts::four_gaussians(rng, 500, 2);
  const std::vector<LevelConfig> one{{1, 4, 2}};
  const auto trained = train_codebooks_ema(data.points, one, {.rng_seed = seed});
  const double mse = trained.reports[0].final_mse;
  const double lloyd = oracle::lloyd_kmeans_mse(data.points, 4, seed);
  o.expect(mse <= 1.5 * lloyd, "EMA mse " + fmt(mse) + " vs Lloyd " + fmt(lloyd));
  o.expect(mse <= 1.5 * data.within_variance, "EMA mse " + fmt(mse) + " vs within-cluster " + fmt(data.within_variance));

  // Residual energy across a trained [8,4,2,1] cascade on 4096 smooth frames.
  ts::Rng walk(seed + 1);
  std::normal_distribution<float> step(0.0f, 0.3f), jitter(0.0f, 0.2f);
  FrameTensor x(4096, 8);
  std::vector<float> level(8, 0.0f);
  for (std::size_t t = 0; t < x.frames(); ++t)
    for (std::size_t c = 0; c < 8; ++c) x(t, c) = (level[c] = 0.95f * level[c] + step(walk)) + jitter(walk);
  const std::vector<LevelConfig> cascade{{8, 64, 8}, {4, 64, 8}, {2, 64, 8}, {1, 64, 8}};
  const auto r = train_codebooks_ema(x, cascade, {.iterations = 30, .rng_seed = seed});
  std::vector<double> energy{ts::mean_energy(x)};
  for (std::size_t k = 1; k <= cascade.size(); ++k)
    energy.push_back(ts::mean_energy(quantize(x, std::span(r.levels).first(k)).residual));
  std::string trace;
  for (std::size_t k = 0; k < energy.size(); ++k) {
    trace += (k ? " -> " : "") + fmt(energy[k], 4);
    if (k) o.expect(energy[k] <= 1.01 * energy[k - 1], "energy grew at level " + std::to_string(k));
  }
  o.note("EMA mse " + fmt(mse, 4) + " (Lloyd " + fmt(lloyd, 4) + ", ratio " + fmt(mse / lloyd, 4) +
         "); residual energy " + trace);
  return o;
}

Outcome noise_block_behaviour() {
  Outcome o;
  ts::Rng rng(1007);
  const auto x = ts::random_tensor(rng, 4, 6);
  const NoiseBlockParams p{ts::random_linear(rng, 6, 6, false)};
  o.expect(noise_block(x, p, FrameTensor(4, 1)) == x, "eps=0 not identity");

  std::normal_distribution<float> normal;
  const int draws = 10000;
  std::vector<double> sum(x.size(), 0.0), sq(x.size(), 0.0);
  for (int i = 0; i < draws; ++i) {
    FrameTensor eps(4, 1);
    for (float& e : eps.data()) e = normal(rng);
    const auto y = noise_block(x, p, eps);
    for (std::size_t k = 0; k < y.size(); ++k) {
      sum[k] += y.data()[k];
      sq[k] += double(y.data()[k]) * y.data()[k];
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double mean = sum[k] / draws;
    const double se = std::sqrt((sq[k] / draws - mean * mean) / draws);
    worst = std::max(worst, std::abs(mean - x.data()[k]) / se);
  }
  o.expect(worst <= 3.0, "Monte-Carlo deviation " + fmt(worst) + " SE");

  AudioBuffer audio{24000, std::vector<float>(3000)};
  for (float& s : audio.samples) s = ts::uniform(rng, -0.5f, 0.5f);
  const auto codes = Codec::build(preset("speech-24k"), 9).encode(audio);
  const auto a = Codec::build(preset("speech-24k"), 9).decode(codes, NoiseMode::seeded(123));
  const auto b = Codec::build(preset("speech-24k"), 9).decode(codes, NoiseMode::seeded(123));
  o.expect(a.samples == b.samples, "seeded decode differs between runs");
  o.note("eps=0 exact; worst MC deviation " + fmt(worst, 3) + " SE; seeded decode bit-identical");
  return o;
}

std::vector<std::uint8_t> read_hex(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::uint8_t> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line.substr(0, line.find('#')));
    std::string byte;
    while (ls >> byte) out.push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
  }
  return out;
}

Outcome bitstream_format() {
  Outcome o;
  BitstreamHeader h;
  h.bits_per_token = 12;
  h.config_hash = 0x0123456789ABCDEFull;
  h.sample_rate = 24000;
  h.hop = 512;
  h.original_sample_count = 1000;
  h.latent_frames = 4;
  h.strides = {2, 1};
  const MultiScaleCodes codes{{{0xABC, 0x123}, {0xDEF, 0x000, 0xFFF, 0x456}}};
  const auto golden = read_hex(MSCODEC_TEST_DATA "/golden_stream.hex");
  o.expect(!golden.empty() && pack(codes, h) == golden, "golden fixture mismatch");

  ts::Rng rng(1008);
  int ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    BitstreamHeader r = h;
    r.bits_per_token = static_cast<std::uint8_t>(ts::pick(rng, 1, 16));
    r.strides.clear();
    for (std::size_t n = ts::pick(rng, 1, 5); n > 0; --n) r.strides.push_back(1u << ts::pick(rng, 0, 3));
    r.latent_frames = static_cast<std::uint32_t>(8 * ts::pick(rng, 0, 8));
    MultiScaleCodes c;
    for (std::size_t len : r.level_lengths()) {
      c.levels.emplace_back(len);
      for (auto& t : c.levels.back()) t = static_cast<Token>(rng() & ((1u << r.bits_per_token) - 1));
    }
    const auto bytes = pack(c, r);
    const auto u = unpack(bytes);
    const auto payload = std::vector<std::uint8_t>(bytes.begin() + static_cast<long>(r.serialized_size()), bytes.end());
    ok += u.codes == c && u.header == r && payload == oracle::naive_bit_pack(c.levels, r.bits_per_token);
  }
  o.expect(ok == 1000, std::to_string(ok) + "/1000 roundtrips");

  const std::size_t cut = h.serialized_size() + 4;
  std::string underrun;
  try {
    unpack(std::span(golden).first(cut));
  } catch (const Error& e) {
    if (e.code() == Errc::truncated) underrun = e.what();
  }
  o.expect(underrun.find("offset " + std::to_string(cut)) != std::string::npos, "truncation error: " + underrun);
  h.latent_frames = 3;
  h.strides = {1};
  auto padded = pack(MultiScaleCodes{{{1, 2, 3}}}, h);
  padded.back() |= 1;
  o.expect(error_code([&] { unpack(padded); }) == Errc::corrupt, "pad bits not rejected");
  o.note("golden match; 1000/1000 roundtrips; underrun and pad-bit errors raised");
  return o;
}

Outcome metric_checks() {
  Outcome o;
  const std::uint32_t rate = 16000;
  ts::Rng rng(1009);
  AudioBuffer ref{rate, std::vector<float>(rate)}, est = ref;
  for (std::size_t i = 0; i < rate; ++i) {
    const double t = double(i) / rate;
    ref.samples[i] = static_cast<float>(std::sin(2.0 * std::numbers::pi * 440.0 * t));
    est.samples[i] = static_cast<float>(0.8 * std::sin(2.0 * std::numbers::pi * 440.0 * t + 0.2) +
                                        0.1 * std::sin(2.0 * std::numbers::pi * 1250.0 * t)) +
                     ts::uniform(rng, -0.05f, 0.05f);
  }
  const double base = si_sdr(ref, est);
  double drift = 0.0;
  for (float c : {0.1f, 10.0f}) {
    AudioBuffer s = est;
    for (float& v : s.samples) v *= c;
    drift = std::max(drift, std::abs(si_sdr(ref, s) - base));
  }
  o.expect(drift < 1e-6, "scale drift " + fmt(drift));

  // Orthogonalized noise at one tenth of the reference energy: 10 dB.
  std::vector<double> n(rate);
  double rn = 0, rr = 0, nn = 0;
  for (std::size_t i = 0; i < rate; ++i) {
    n[i] = ts::uniform(rng);
    rn += n[i] * ref.samples[i];
    rr += double(ref.samples[i]) * ref.samples[i];
  }
  for (std::size_t i = 0; i < rate; ++i) nn += std::pow(n[i] -= rn / rr * ref.samples[i], 2);
  AudioBuffer ten = ref;
  for (std::size_t i = 0; i < rate; ++i) ten.samples[i] += static_cast<float>(std::sqrt(rr / 10.0 / nn) * n[i]);
  const double db = si_sdr(ref, ten);
  o.expect(std::abs(db - 10.0) <= 0.1, "10 dB case gave " + fmt(db));

  o.expect(mel_l1(ref, ref) == 0.0 && stft_l1(est, est) == 0.0, "self-distance nonzero");
  const SpectralConfig cfg;
  const double mel = mel_l1(ref, est, cfg);
  const double stft = stft_l1(ref, est, cfg);
  const double mel_o = oracle::spectral_l1(ref.samples, est.samples, rate, cfg.window_sizes, cfg.mel_bins, true, cfg.log_epsilon);
  const double stft_o = oracle::spectral_l1(ref.samples, est.samples, rate, cfg.window_sizes, cfg.mel_bins, false, cfg.log_epsilon);
  o.expect(std::abs(mel - mel_o) < 1e-4, "mel " + fmt(mel, 10) + " vs oracle " + fmt(mel_o, 10));
  o.expect(std::abs(stft - stft_o) < 1e-4, "stft " + fmt(stft, 10) + " vs oracle " + fmt(stft_o, 10));
  o.note("scale drift " + fmt(drift, 3) + "; 10 dB case " + fmt(db, 6) + " dB; mel diff " +
         fmt(std::abs(mel - mel_o), 3) + ", stft diff " + fmt(std::abs(stft - stft_o), 3));
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + MSCODEC_CLI + "' " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome shape_contract() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "mscodec_acceptance";
  fs::create_directories(dir);
  const auto wav = dir / "in.wav", stream = dir / "in.mscb", out = dir / "out.wav";
  ts::Rng rng(1010);
  std::size_t lib_ok = 0, cli_ok = 0, total = 0;
  for (const auto& name : kPaperPresets) {
    const auto cfg = preset(name);
    const auto codec = Codec::build(cfg, 17);
    const std::size_t block = cfg.hop() * cfg.stride_lcm();
    for (int trial = 0; trial < 50; ++trial) {
      ++total;
      const std::size_t len = ts::pick(rng, 1, 3 * block);
      AudioBuffer x{cfg.sample_rate, std::vector<float>(len)};
      for (float& s : x.samples) s = ts::uniform(rng, -0.8f, 0.8f);
      const auto y = codec.decode(codec.encode(x), NoiseMode::off());
      lib_ok += y.samples.size() == (len + block - 1) / block * block;

      write_wav(wav, x);
      const std::string q = "'" + wav.string() + "' '" + stream.string() + "'";
      if (run_cli("encode " + q + " --preset " + name + " --seed 17") == 0 &&
          run_cli("decode '" + stream.string() + "' '" + out.string() + "' --seed 17 --noise off") == 0) {
        cli_ok += read_wav(out).samples.size() == len;
      }
    }
  }
  o.expect(lib_ok == total, std::to_string(lib_ok) + "/" + std::to_string(total) + " padded lengths");
  o.expect(cli_ok == total, std::to_string(cli_ok) + "/" + std::to_string(total) + " trimmed CLI lengths");
  o.note(std::to_string(total) + " lengths over 4 presets: library padded and CLI trimmed lengths exact");
  fs::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 bitrate accounting", bitrate_accounting},
      {"AC2 token-rate accounting", token_rate_accounting},
      {"AC3 multi-scale RVQ correctness", msrvq_correctness},
      {"AC4 pool/upsample algebra", pool_upsample_algebra},
      {"AC5 kernel oracles", kernel_oracles},
      {"AC6 desk-scale codebook learning", codebook_learning},
      {"AC7 noise block", noise_block_behaviour},
      {"AC8 bitstream", bitstream_format},
      {"AC9 metrics", metric_checks},
      {"AC10 end-to-end shape contract", shape_contract},
  };
  int failed = 0;
  const auto suite_start = std::chrono::steady_clock::now();
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if ((name.rfind("AC1 ", 0) == 0 || name.rfind("AC2 ", 0) == 0) && secs >= 1.0) {
      o.pass = false;
      o.detail += "; exceeded 1 s budget";
    }
    failed += !o.pass;
    std::printf("[%s] %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start).count();
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(), total);
  return failed == 0 ? 0 : 1;
}
