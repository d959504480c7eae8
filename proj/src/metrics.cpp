#include "mscodec/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace mscodec {

namespace {

// FFTW planning is not thread-safe; execution on private buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  const fftw_complex* output() const { return out_; }
  void run() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

void check_pair(const AudioBuffer& ref, const AudioBuffer& est) {
  if (ref.sample_rate != est.sample_rate) {
    throw Error(Errc::sample_rate_mismatch, "metrics: sample rates differ (" +
                                                std::to_string(ref.sample_rate) + " vs " +
                                                std::to_string(est.sample_rate) + ")");
  }
  if (ref.samples.size() != est.samples.size()) {
    throw Error(Errc::shape_mismatch, "metrics: lengths differ (" +
                                          std::to_string(ref.samples.size()) + " vs " +
                                          std::to_string(est.samples.size()) + ")");
  }
  if (ref.samples.empty()) throw Error(Errc::empty_input, "metrics: empty signals");
}

double mean_abs_log_diff(const std::vector<double>& a, const std::vector<double>& b, double eps) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::abs(std::log10(a[i] + eps) - std::log10(b[i] + eps));
  }
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

std::vector<double> apply_filterbank(const std::vector<double>& mag, std::size_t bins,
                                     const std::vector<double>& fb, std::size_t mels) {
  const std::size_t frames = mag.size() / bins;
  std::vector<double> out(frames * mels, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t m = 0; m < mels; ++m) {
      double s = 0.0;
      for (std::size_t k = 0; k < bins; ++k) s += fb[m * bins + k] * mag[f * bins + k];
      out[f * mels + m] = s;
    }
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

void SpectralConfig::validate() const {
  if (window_sizes.empty()) throw Error(Errc::invalid_argument, "spectral: no window sizes");
  if (mel_bins.size() != window_sizes.size()) {
    throw Error(Errc::invalid_argument, "spectral: need one mel bin count per window size");
  }
  for (std::size_t w : window_sizes) {
    if (w < 4 || (w & (w - 1)) != 0) {
      throw Error(Errc::invalid_argument, "spectral: window sizes must be powers of two >= 4");
    }
  }
  for (std::size_t m : mel_bins) {
    if (m == 0) throw Error(Errc::invalid_argument, "spectral: mel bin counts must be >= 1");
  }
  if (!(log_epsilon > 0.0)) throw Error(Errc::invalid_argument, "spectral: log epsilon must be > 0");
  if (f_min < 0.0 || (f_max != 0.0 && f_max <= f_min)) {
    throw Error(Errc::invalid_argument, "spectral: invalid frequency range");
  }
}

double si_sdr(const AudioBuffer& reference, const AudioBuffer& estimate) {
  check_pair(reference, estimate);
  const auto& r = reference.samples;
  const auto& e = estimate.samples;
  double rr = 0.0;
  double er = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    rr += static_cast<double>(r[i]) * r[i];
    er += static_cast<double>(e[i]) * r[i];
  }
  if (rr == 0.0) throw Error(Errc::invalid_argument, "si_sdr: reference is all zeros");
  const double alpha = er / rr;
  double target = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double t = alpha * r[i];
    const double n = t - e[i];
    target += t * t;
    noise += n * n;
  }
  if (target == 0.0) return -kSiSdrCap;  // estimate orthogonal to (or absent from) the reference
  if (noise == 0.0) return kSiSdrCap;
  return std::clamp(10.0 * std::log10(target / noise), -kSiSdrCap, kSiSdrCap);
}

std::vector<double> stft_magnitude(const std::vector<float>& signal, std::size_t window) {
  const std::size_t hop = window / 4;
  const std::size_t half = window / 2;
  const std::size_t bins = window / 2 + 1;
  const std::size_t frames = signal.size() / hop + 1;
  std::vector<double> hann(window);
  for (std::size_t n = 0; n < window; ++n) {
    hann[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(window));
  }

  RealFft fft(window);
  std::vector<double> mag(frames * bins);
  const auto N = static_cast<std::ptrdiff_t>(signal.size());
  for (std::size_t f = 0; f < frames; ++f) {
    double* in = fft.input();
    for (std::size_t n = 0; n < window; ++n) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(f * hop + n) - static_cast<std::ptrdiff_t>(half);
      const double v = (idx >= 0 && idx < N) ? signal[static_cast<std::size_t>(idx)] : 0.0;
      in[n] = v * hann[n];
    }
    fft.run();
    const fftw_complex* out = fft.output();
    for (std::size_t k = 0; k < bins; ++k) mag[f * bins + k] = std::hypot(out[k][0], out[k][1]);
  }
  return mag;
}

std::vector<double> mel_filterbank(std::size_t mel_bins, std::size_t window, double sample_rate,
                                   double f_min, double f_max) {
  const std::size_t bins = window / 2 + 1;
  const double top = f_max > 0.0 ? f_max : sample_rate / 2.0;
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(top);
  std::vector<double> edges(mel_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(mel_bins + 1));
  }
  std::vector<double> fb(mel_bins * bins, 0.0);
  for (std::size_t m = 0; m < mel_bins; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(window);
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      fb[m * bins + k] = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

double stft_l1(const AudioBuffer& reference, const AudioBuffer& estimate, const SpectralConfig& cfg) {
  check_pair(reference, estimate);
  cfg.validate();
  double total = 0.0;
  for (std::size_t w : cfg.window_sizes) {
    total += mean_abs_log_diff(stft_magnitude(reference.samples, w), stft_magnitude(estimate.samples, w),
                               cfg.log_epsilon);
  }
  return total / static_cast<double>(cfg.window_sizes.size());
}

double mel_l1(const AudioBuffer& reference, const AudioBuffer& estimate, const SpectralConfig& cfg) {
  check_pair(reference, estimate);
  cfg.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.window_sizes.size(); ++i) {
    const std::size_t w = cfg.window_sizes[i];
    const std::size_t bins = w / 2 + 1;
    const auto fb = mel_filterbank(cfg.mel_bins[i], w, reference.sample_rate, cfg.f_min, cfg.f_max);
    const auto a = apply_filterbank(stft_magnitude(reference.samples, w), bins, fb, cfg.mel_bins[i]);
    const auto b = apply_filterbank(stft_magnitude(estimate.samples, w), bins, fb, cfg.mel_bins[i]);
    total += mean_abs_log_diff(a, b, cfg.log_epsilon);
  }
  return total / static_cast<double>(cfg.window_sizes.size());
}

}  // namespace mscodec
